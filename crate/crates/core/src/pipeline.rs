//! End-to-end run: mask, closed boundary, signed distance, persistence,
//! filtering, typing and plots.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classify::{filter_persistence, summarize, TextureSummary};
use crate::cubical::{build_filtration, compute_persistence, Diagram};
use crate::error::{Error, Result};
use crate::grid::{
    close_boundary, load_field_with_dtype, threshold_mask, BinaryMask, FieldFormat, GridDims, Keep,
    ScalarField,
};
use crate::io::{diagram_to_csv, diagram_to_json, summary_to_json, write_text, Provenance};
use crate::plot::plot_svg_string;
use crate::sdt::{signed_distance, SignedDistanceField, TRANSFORM_ID};
use crate::synth::{grf_preset_with_dims, rasterize, AnalyticShape, Preset, ShapeKind};

pub const DEFAULT_SHAPE_SIZE: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: Option<PathBuf>,
    pub preset: Option<String>,
    pub shape: Option<String>,
    /// Cube edge for synthesized inputs; presets default to 100, shapes to 64.
    pub size: Option<usize>,
    pub seed: u64,
    pub close_width: usize,
    pub spacing: f64,
    pub min_pers: f64,
    pub density_sigma: f64,
    /// Not echoed into outputs, so artifacts do not depend on where they land.
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input: None,
            preset: None,
            shape: None,
            size: None,
            seed: 0,
            close_width: 3,
            spacing: 1.0,
            min_pers: 0.5,
            density_sigma: 0.5,
            out: None,
        }
    }
}

impl PipelineConfig {
    pub fn for_shape(shape: &str) -> Self {
        PipelineConfig {
            shape: Some(shape.to_string()),
            ..Default::default()
        }
    }

    pub fn for_preset(preset: Preset, seed: u64) -> Self {
        PipelineConfig {
            preset: Some(preset.to_string()),
            seed,
            ..Default::default()
        }
    }

    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

/// Integer volumes holding only 0 and 1 are masks; anything else is a field
/// thresholded at zero, keeping values >= 0.
pub fn field_to_mask(field: &ScalarField, integer: bool) -> BinaryMask {
    if integer && field.values().iter().all(|&v| v == 0.0 || v == 1.0) {
        threshold_mask(field, 1.0, Keep::AboveOrEqual)
    } else {
        threshold_mask(field, 0.0, Keep::AboveOrEqual)
    }
}

pub fn load_mask(path: &Path) -> Result<BinaryMask> {
    let (field, dtype) = load_field_with_dtype(path, FieldFormat::from_path(path))?;
    Ok(field_to_mask(&field, dtype.is_integer()))
}

pub fn resolve_mask(cfg: &PipelineConfig) -> Result<BinaryMask> {
    let sources =
        cfg.input.is_some() as u8 + cfg.preset.is_some() as u8 + cfg.shape.is_some() as u8;
    if sources != 1 {
        return Err(Error::InvalidParameter(
            "exactly one of input, preset or shape is required".into(),
        ));
    }
    if let Some(path) = &cfg.input {
        return load_mask(path);
    }
    if let Some(p) = &cfg.preset {
        let preset: Preset = p.parse()?;
        let dims = GridDims::cube(cfg.size.unwrap_or(Preset::SIZE))?;
        let field = grf_preset_with_dims(preset, cfg.seed, dims)?;
        return Ok(threshold_mask(&field, 0.0, Keep::AboveOrEqual));
    }
    let kind: ShapeKind = cfg.shape.as_deref().unwrap_or_default().parse()?;
    let dims = GridDims::cube(cfg.size.unwrap_or(DEFAULT_SHAPE_SIZE))?;
    rasterize(&AnalyticShape::centered(kind, dims))
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub config: PipelineConfig,
    pub mask: BinaryMask,
    pub sdf: SignedDistanceField,
    pub diagram: Diagram,
    pub filtered: Diagram,
    pub summary: TextureSummary,
    pub provenance: Provenance,
}

pub const ARTIFACTS: [&str; 6] = [
    "diagram.csv",
    "diagram.json",
    "summary.json",
    "pd0.svg",
    "pd1.svg",
    "pd2.svg",
];

impl PipelineOutput {
    /// `(file name, contents)` of every artifact, in [`ARTIFACTS`] order.
    pub fn artifacts(&self) -> Vec<(&'static str, String)> {
        let prov = Some(&self.provenance);
        let sigma = self.config.density_sigma;
        let mut out = vec![
            (ARTIFACTS[0], diagram_to_csv(&self.filtered, prov)),
            (ARTIFACTS[1], diagram_to_json(&self.filtered, prov)),
            (ARTIFACTS[2], summary_to_json(&self.summary, prov)),
        ];
        for dim in 0..3u8 {
            out.push((
                ARTIFACTS[3 + dim as usize],
                plot_svg_string(&self.filtered, dim, sigma, prov),
            ));
        }
        out
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        for (name, text) in self.artifacts() {
            write_text(&dir.join(name), &text)?;
        }
        Ok(())
    }
}

/// Signed distance persistence of an already resolved mask.
pub fn run_on_mask(cfg: &PipelineConfig, mask: BinaryMask) -> Result<PipelineOutput> {
    if !(cfg.min_pers >= 0.0 && cfg.density_sigma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "min_pers must be >= 0 and density_sigma > 0 (got {}, {})",
            cfg.min_pers, cfg.density_sigma
        )));
    }
    let closed =
        close_boundary(&mask, cfg.close_width).map_err(|e| e.in_stage("close_boundary"))?;
    let sdf = signed_distance(&closed, cfg.spacing).map_err(|e| e.in_stage("signed_distance"))?;
    let cx = build_filtration(&sdf.field);
    let mut diagram = compute_persistence(&cx);
    diagram.meta.source_hash = Some(sdf.source_hash);
    diagram.meta.spacing = cfg.spacing;
    diagram.meta.transform = TRANSFORM_ID.to_string();
    let filtered = filter_persistence(&diagram, cfg.min_pers);
    let summary = summarize(&diagram, cfg.min_pers).map_err(|e| e.in_stage("classify"))?;
    let provenance = Provenance::new(cfg.echo(), Some(sdf.source_hash));
    Ok(PipelineOutput {
        config: cfg.clone(),
        mask: closed,
        sdf,
        diagram,
        filtered,
        summary,
        provenance,
    })
}

pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutput> {
    let mask = resolve_mask(cfg).map_err(|e| e.in_stage("input"))?;
    run_on_mask(cfg, mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::PairType;

    #[test]
    fn defaults() {
        let c = PipelineConfig::default();
        assert_eq!(
            (c.close_width, c.spacing, c.min_pers, c.density_sigma),
            (3, 1.0, 0.5, 0.5)
        );
        let parsed: PipelineConfig = serde_json::from_str(r#"{"seed": 4}"#).unwrap();
        assert_eq!(parsed.seed, 4);
        assert_eq!(parsed.close_width, 3);
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"sede": 4}"#).is_err());
    }

    #[test]
    fn requires_one_source() {
        let err = run_pipeline(&PipelineConfig::default()).unwrap_err();
        assert!(matches!(err.root(), Error::InvalidParameter(_)));
    }

    #[test]
    fn small_ball() {
        let cfg = PipelineConfig {
            size: Some(24),
            ..PipelineConfig::for_shape("ball:6")
        };
        let out = run_pipeline(&cfg).unwrap();
        assert_eq!(out.summary.count(PairType::Essential), 1);
        assert_eq!(out.summary.counts.len(), 1);
        let arts = out.artifacts();
        assert_eq!(arts.len(), 6);
        assert!(arts[0].1.starts_with(crate::io::CSV_HEADER));
        assert!(!arts[1].1.contains("\"out\""));
    }

    #[test]
    fn integer_masks_are_not_thresholded() {
        let f = ScalarField::new(GridDims::new(2, 1, 1).unwrap(), vec![0.0, 1.0]).unwrap();
        assert_eq!(field_to_mask(&f, true).count_ones(), 1);
        assert_eq!(field_to_mask(&f, false).count_ones(), 2);
    }
}
