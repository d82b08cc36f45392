//! WebAssembly exports for the static page in `www/`. Each export takes plain
//! numbers and strings and returns a JSON string; failures come back as
//! `{"error": "..."}` so the page never has to catch.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use sdph::cubical::{build_filtration, compute_persistence};
use sdph::grid::{close_boundary, ScalarField};
use sdph::io::hash_hex;
use sdph::metrics::bottleneck;
use sdph::pipeline::{resolve_mask, run_pipeline, PipelineConfig, PipelineOutput};
use sdph::plot::plot_svg_string;
use sdph::sdt::signed_distance;

/// Larger volumes make the page unresponsive.
pub const MAX_SIZE: u32 = 96;

fn respond(result: Result<Value, String>) -> String {
    match result {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e }).to_string(),
    }
}

fn check_size(size: u32) -> Result<usize, String> {
    if (8..=MAX_SIZE).contains(&size) {
        Ok(size as usize)
    } else {
        Err(format!("size must be between 8 and {MAX_SIZE}"))
    }
}

fn report(out: &PipelineOutput) -> Value {
    let sigma = out.config.density_sigma;
    json!({
        "summary": out.summary,
        "source_hash": hash_hex(out.sdf.source_hash),
        "foreground": out.mask.count_ones() as f64 / out.mask.dims().len() as f64,
        "pairs": out.diagram.pairs.len(),
        "svg": (0..3u8).map(|d| plot_svg_string(&out.filtered, d, sigma, None)).collect::<Vec<_>>(),
    })
}

/// Diagrams and texture summary of an analytic solid such as `torus:16,6`.
#[wasm_bindgen]
pub fn shape_diagram(
    shape: &str,
    size: u32,
    close_width: u32,
    min_pers: f64,
    sigma: f64,
) -> String {
    respond((|| {
        let cfg = PipelineConfig {
            size: Some(check_size(size)?),
            close_width: close_width as usize,
            min_pers,
            density_sigma: sigma,
            ..PipelineConfig::for_shape(shape)
        };
        let out = run_pipeline(&cfg).map_err(|e| e.to_string())?;
        Ok(report(&out))
    })())
}

/// Texture of the zero superlevel set of a GRF preset (F1..F5).
#[wasm_bindgen]
pub fn grf_texture(preset: &str, seed: u32, size: u32, min_pers: f64, sigma: f64) -> String {
    respond((|| {
        let cfg = PipelineConfig {
            preset: Some(preset.to_string()),
            seed: seed as u64,
            size: Some(check_size(size)?),
            min_pers,
            density_sigma: sigma,
            ..PipelineConfig::default()
        };
        let out = run_pipeline(&cfg).map_err(|e| e.to_string())?;
        Ok(report(&out))
    })())
}

/// Perturbs a solid's signed distance field by uniform noise in `[-eps, eps]`
/// and compares diagrams: every bottleneck distance must stay within the
/// sup-norm of the noise.
#[wasm_bindgen]
pub fn stability_check(shape: &str, size: u32, eps: f64, seed: u32) -> String {
    respond((|| {
        if !(eps.is_finite() && eps >= 0.0) {
            return Err("eps must be a finite non-negative number".to_string());
        }
        let cfg = PipelineConfig {
            size: Some(check_size(size)?),
            ..PipelineConfig::for_shape(shape)
        };
        let mask = resolve_mask(&cfg).map_err(|e| e.to_string())?;
        let closed = close_boundary(&mask, cfg.close_width).map_err(|e| e.to_string())?;
        let sdf = signed_distance(&closed, cfg.spacing).map_err(|e| e.to_string())?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed as u64);
        let noisy: Vec<f64> = sdf
            .field
            .values()
            .iter()
            .map(|v| v + rng.random_range(-eps..=eps))
            .collect();
        let noisy = ScalarField::new(sdf.field.dims(), noisy).map_err(|e| e.to_string())?;
        let sup = sdf
            .field
            .values()
            .iter()
            .zip(noisy.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let d0 = compute_persistence(&build_filtration(&sdf.field));
        let d1 = compute_persistence(&build_filtration(&noisy));
        let distances: Vec<f64> = (0..3u8).map(|d| bottleneck(&d0, &d1, d).distance).collect();
        let holds = distances.iter().all(|&d| d <= sup + 1e-9);
        Ok(json!({
            "eps": eps,
            "sup_norm": sup,
            "distances": distances,
            "holds": holds,
            "pairs": [d0.pairs.len(), d1.pairs.len()],
            "svg": [
                plot_svg_string(&d0, 1, 0.5, None),
                plot_svg_string(&d1, 1, 0.5, None),
            ],
        }))
    })())
}
