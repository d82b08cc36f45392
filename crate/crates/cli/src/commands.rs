use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::{json, Value};

use sdph::classify::summarize;
use sdph::cubical::{build_filtration, compute_persistence, DiagramMeta};
use sdph::grid::{
    load_field, save_field_annotated, save_mask_annotated, threshold_mask, FieldFormat, GridDims,
    Keep,
};
use sdph::io::{
    diagram_to_csv, diagram_to_json, read_diagram, summary_to_json, write_text, Provenance,
};
use sdph::metrics::bottleneck;
use sdph::pipeline::{load_mask, run_pipeline, PipelineConfig, PipelineOutput, DEFAULT_SHAPE_SIZE};
use sdph::plot::plot_svg_string;
use sdph::sdt::{is_lipschitz, mask_hash, signed_distance, TRANSFORM_ID};
use sdph::synth::{grf_preset_with_dims, rasterize, AnalyticShape, Preset, ShapeKind};

use crate::{styled, CliError};

type Result<T> = std::result::Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "sdph",
    version,
    about = "Signed distance persistent homology of 3D binary shapes"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample Gaussian random field presets to volume files
    GenGrf {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        out: Output,
        #[command(flatten)]
        batch: Batch,
    },
    /// Rasterize an analytic solid to a 0/1 mask
    GenShape {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        sdf: SdfArgs,
        #[command(flatten)]
        out: Output,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Signed distance field of a mask (fields are thresholded at 0, keep >= 0)
    Sdf {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        sdf: SdfArgs,
        #[command(flatten)]
        out: Output,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Sublevel persistence diagram of a scalar volume
    Ph {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        out: Output,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Type the pairs of a diagram and summarize the texture
    Classify {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        filter: FilterArgs,
        #[command(flatten)]
        out: Output,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Bottleneck distance between two diagrams
    Bottleneck {
        /// The two diagrams (CSV or JSON)
        #[arg(long, num_args = 1, required = true)]
        input: Vec<PathBuf>,
        /// Homological dimension; all three if omitted
        #[arg(long)]
        dim: Option<u8>,
        #[command(flatten)]
        out: Output,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// SVG persistence diagrams
    Plot {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        filter: FilterArgs,
        /// Single dimension to draw; all three if omitted
        #[arg(long)]
        dim: Option<u8>,
        #[command(flatten)]
        out: Output,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Mask to diagrams, summary and plots in one run
    Pipeline {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        sdf: SdfArgs,
        #[command(flatten)]
        filter: FilterArgs,
        #[command(flatten)]
        out: Output,
        #[command(flatten)]
        batch: Batch,
    },
}

#[derive(Args)]
struct Source {
    /// Input file (.npy, or raw with a .json sidecar; diagrams as .csv/.json)
    #[arg(long)]
    input: Option<PathBuf>,
    /// GRF preset, or a comma separated list: F1..F5
    #[arg(long)]
    preset: Option<String>,
    /// Analytic solid: ball:R, shell:R1,R2, two-balls:R1,R2,D, torus:R,r
    #[arg(long)]
    shape: Option<String>,
    /// Seed, list (0,3,5) or inclusive range (0-19)
    #[arg(long)]
    seed: Option<String>,
    /// Cube edge of synthesized volumes [presets: 100, shapes: 64]
    #[arg(long)]
    size: Option<usize>,
}

#[derive(Args)]
struct SdfArgs {
    /// Voxels forced to background along each domain wall [default: 3]
    #[arg(long)]
    close_width: Option<usize>,
    /// Physical voxel edge length [default: 1.0]
    #[arg(long)]
    spacing: Option<f64>,
}

#[derive(Args)]
struct FilterArgs {
    /// Drop finite pairs with death - birth below this [default: 0.5]
    #[arg(long)]
    min_pers: Option<f64>,
    /// Kernel width for density coloring [default: 0.5]
    #[arg(long)]
    density_sigma: Option<f64>,
}

#[derive(Args)]
struct Output {
    /// Output file or directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// npy|raw for volumes, csv|json for diagrams
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args)]
struct ConfigArg {
    /// Flat JSON config; flags take precedence over it
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct Batch {
    /// Worker threads for runs over several presets/seeds
    #[arg(long)]
    jobs: Option<usize>,
    #[command(flatten)]
    config: ConfigArg,
}

fn input_err(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

fn load_config(arg: &ConfigArg) -> Result<PipelineConfig> {
    let Some(path) = &arg.config else {
        return Ok(PipelineConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| input_err(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| input_err(format!("bad config {}: {e}", path.display())))
}

/// Flags over file over defaults.
fn merge(
    arg: &ConfigArg,
    source: Option<&Source>,
    sdf: Option<&SdfArgs>,
    filter: Option<&FilterArgs>,
    out: Option<&Output>,
) -> Result<PipelineConfig> {
    let mut cfg = load_config(arg)?;
    if let Some(s) = source {
        if s.input.is_some() || s.preset.is_some() || s.shape.is_some() {
            cfg.input = s.input.clone();
            cfg.preset = s.preset.clone();
            cfg.shape = s.shape.clone();
        }
        if s.size.is_some() {
            cfg.size = s.size;
        }
    }
    if let Some(s) = sdf {
        cfg.close_width = s.close_width.unwrap_or(cfg.close_width);
        cfg.spacing = s.spacing.unwrap_or(cfg.spacing);
    }
    if let Some(f) = filter {
        cfg.min_pers = f.min_pers.unwrap_or(cfg.min_pers);
        cfg.density_sigma = f.density_sigma.unwrap_or(cfg.density_sigma);
    }
    if let Some(o) = out {
        if o.out.is_some() {
            cfg.out = o.out.clone();
        }
    }
    Ok(cfg)
}

fn parse_seeds(flag: Option<&str>, default: u64) -> Result<Vec<u64>> {
    let Some(text) = flag else {
        return Ok(vec![default]);
    };
    let bad = || input_err(format!("bad --seed {text:?}"));
    let mut seeds = Vec::new();
    for part in text.split(',').map(str::trim) {
        if let Some((a, b)) = part.split_once('-') {
            let (a, b): (u64, u64) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
            if a > b {
                return Err(bad());
            }
            seeds.extend(a..=b);
        } else {
            seeds.push(part.parse().map_err(|_| bad())?);
        }
    }
    Ok(seeds)
}

fn parse_presets(text: &str) -> Result<Vec<Preset>> {
    text.split(',')
        .map(|p| p.trim().parse::<Preset>().map_err(CliError::from))
        .collect()
}

fn field_format(out: &Output, path: &Path) -> Result<FieldFormat> {
    match out.format.as_deref() {
        None => Ok(FieldFormat::from_path(path)),
        Some("npy") => Ok(FieldFormat::Npy),
        Some("raw") => Ok(FieldFormat::Raw),
        Some(f) => Err(input_err(format!("--format {f:?}: expected npy or raw"))),
    }
}

fn required_out(cfg: &PipelineConfig) -> Result<PathBuf> {
    cfg.out
        .clone()
        .ok_or_else(|| input_err("--out is required"))
}

fn required_input(cfg: &PipelineConfig) -> Result<PathBuf> {
    cfg.input
        .clone()
        .ok_or_else(|| input_err("--input is required"))
}

fn echo(command: &str, cfg: &PipelineConfig, extra: Value) -> Value {
    let mut v = cfg.echo();
    v["command"] = json!(command);
    if let (Value::Object(map), Value::Object(more)) = (&mut v, extra) {
        map.extend(more);
    }
    v
}

/// Text goes to `--out` if given, else stdout.
fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => Ok(write_text(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn thread_pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    let n = jobs.unwrap_or(1);
    if n == 0 {
        return Err(input_err("--jobs must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| CliError::Invariant(e.to_string()))
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenGrf { source, out, batch } => gen_grf(&source, &out, &batch),
        Command::GenShape {
            source,
            sdf,
            out,
            config,
        } => gen_shape(
            merge(&config, Some(&source), Some(&sdf), None, Some(&out))?,
            &out,
        ),
        Command::Sdf {
            source,
            sdf,
            out,
            config,
        } => sdf_cmd(
            merge(&config, Some(&source), Some(&sdf), None, Some(&out))?,
            &out,
        ),
        Command::Ph {
            source,
            out,
            config,
        } => ph(merge(&config, Some(&source), None, None, Some(&out))?, &out),
        Command::Classify {
            source,
            filter,
            out,
            config,
        } => classify(merge(
            &config,
            Some(&source),
            None,
            Some(&filter),
            Some(&out),
        )?),
        Command::Bottleneck {
            input,
            dim,
            out,
            config,
        } => {
            let cfg = merge(&config, None, None, None, Some(&out))?;
            bottleneck_cmd(&input, dim, cfg.out.as_deref())
        }
        Command::Plot {
            source,
            filter,
            dim,
            out,
            config,
        } => plot(
            merge(&config, Some(&source), None, Some(&filter), Some(&out))?,
            dim,
        ),
        Command::Pipeline {
            source,
            sdf,
            filter,
            out,
            batch,
        } => {
            let cfg = merge(
                &batch.config,
                Some(&source),
                Some(&sdf),
                Some(&filter),
                Some(&out),
            )?;
            pipeline(cfg, source.seed.as_deref(), batch.jobs)
        }
    }
}

fn gen_grf(source: &Source, out: &Output, batch: &Batch) -> Result<()> {
    let cfg = merge(&batch.config, Some(source), None, None, Some(out))?;
    let presets = parse_presets(
        cfg.preset
            .as_deref()
            .ok_or_else(|| input_err("--preset is required"))?,
    )?;
    let seeds = parse_seeds(source.seed.as_deref(), cfg.seed)?;
    let dims = GridDims::cube(cfg.size.unwrap_or(Preset::SIZE))?;
    let target = required_out(&cfg)?;
    let single = presets.len() * seeds.len() == 1 && target.extension().is_some();
    let jobs: Vec<(Preset, u64)> = presets
        .iter()
        .flat_map(|&p| seeds.iter().map(move |&s| (p, s)))
        .collect();
    let format = field_format(out, &target.join("x.npy"))?;
    let ext = match format {
        FieldFormat::Npy => "npy",
        FieldFormat::Raw => "raw",
    };
    let results: Vec<Result<()>> = thread_pool(batch.jobs)?.install(|| {
        jobs.par_iter()
            .map(|&(preset, seed)| {
                let path = if single {
                    target.clone()
                } else {
                    target.join(format!("{preset}_s{seed}.{ext}"))
                };
                let format = field_format(out, &path)?;
                let field = grf_preset_with_dims(preset, seed, dims)?;
                let (specs, shift) = preset.recipe(seed, dims);
                let mut run_cfg = cfg.clone();
                run_cfg.preset = Some(preset.to_string());
                run_cfg.seed = seed;
                let prov = Provenance::new(echo("gen-grf", &run_cfg, json!({})), None);
                if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                    std::fs::create_dir_all(dir)
                        .map_err(|e| input_err(format!("{}: {e}", dir.display())))?;
                }
                save_field_annotated(&field, &path, format, &serde_json::to_value(&prov).unwrap())?;
                let spec_doc = json!({
                    "preset": preset.to_string(),
                    "components": specs,
                    "shift": shift,
                    "provenance": prov,
                });
                write_text(
                    &path.with_extension("grf.json"),
                    &(serde_json::to_string_pretty(&spec_doc).unwrap() + "\n"),
                )?;
                eprintln!(
                    "{} {preset} seed {seed} -> {}",
                    styled("wrote", "32"),
                    path.display()
                );
                Ok(())
            })
            .collect()
    });
    results.into_iter().collect()
}

fn gen_shape(cfg: PipelineConfig, out: &Output) -> Result<()> {
    let kind: ShapeKind = cfg
        .shape
        .as_deref()
        .ok_or_else(|| input_err("--shape is required"))?
        .parse()?;
    let dims = GridDims::with_spacing(
        cfg.size.unwrap_or(DEFAULT_SHAPE_SIZE),
        cfg.size.unwrap_or(DEFAULT_SHAPE_SIZE),
        cfg.size.unwrap_or(DEFAULT_SHAPE_SIZE),
        cfg.spacing,
    )?;
    let mask = rasterize(&AnalyticShape::centered(kind, dims))?;
    let path = required_out(&cfg)?;
    let prov = Provenance::new(echo("gen-shape", &cfg, json!({})), Some(mask_hash(&mask)));
    save_mask_annotated(
        &mask,
        &path,
        field_format(out, &path)?,
        &serde_json::to_value(prov).unwrap(),
    )?;
    Ok(())
}

fn sdf_cmd(cfg: PipelineConfig, out: &Output) -> Result<()> {
    let mask = load_mask(&required_input(&cfg)?)?;
    let closed = sdph::grid::close_boundary(&mask, cfg.close_width)?;
    let sdf = signed_distance(&closed, cfg.spacing)?;
    if !is_lipschitz(&sdf.field) {
        return Err(CliError::Invariant(
            "signed distance is not 1-Lipschitz".into(),
        ));
    }
    let path = required_out(&cfg)?;
    let prov = Provenance::new(
        echo("sdf", &cfg, json!({ "transform": TRANSFORM_ID })),
        Some(sdf.source_hash),
    );
    save_field_annotated(
        &sdf.field,
        &path,
        field_format(out, &path)?,
        &serde_json::to_value(prov).unwrap(),
    )?;
    Ok(())
}

fn ph(cfg: PipelineConfig, out: &Output) -> Result<()> {
    let field = load_field(
        &required_input(&cfg)?,
        FieldFormat::from_path(&required_input(&cfg)?),
    )?;
    let cx = build_filtration(&field);
    let mut dgm = compute_persistence(&cx);
    let c = cx.cell_counts();
    if dgm.euler_at(field.max_value()) != 1 || c[0] + c[2] != c[1] + c[3] + 1 {
        return Err(CliError::Invariant(
            "Euler characteristic of the box is not 1".into(),
        ));
    }
    // the sign pattern of a signed distance field recovers its mask
    let hash = mask_hash(&threshold_mask(&field, 0.0, Keep::Below));
    dgm.meta = DiagramMeta {
        source_hash: Some(hash),
        spacing: field.dims().spacing,
        ..dgm.meta
    };
    let prov = Provenance::new(echo("ph", &cfg, json!({})), Some(hash));
    let json_out = match out.format.as_deref() {
        Some("json") => true,
        Some("csv") => false,
        None => cfg
            .out
            .as_deref()
            .and_then(Path::extension)
            .is_some_and(|e| e == "json"),
        Some(f) => return Err(input_err(format!("--format {f:?}: expected csv or json"))),
    };
    let text = if json_out {
        diagram_to_json(&dgm, Some(&prov))
    } else {
        diagram_to_csv(&dgm, Some(&prov))
    };
    emit(cfg.out.as_deref(), &text)
}

fn classify(cfg: PipelineConfig) -> Result<()> {
    let dgm = read_diagram(&required_input(&cfg)?)?;
    let summary = summarize(&dgm, cfg.min_pers)?;
    let prov = Provenance::new(echo("classify", &cfg, json!({})), dgm.meta.source_hash);
    emit(cfg.out.as_deref(), &summary_to_json(&summary, Some(&prov)))
}

fn bottleneck_cmd(inputs: &[PathBuf], dim: Option<u8>, out: Option<&Path>) -> Result<()> {
    let [a, b] = inputs else {
        return Err(input_err("bottleneck needs exactly two --input diagrams"));
    };
    if dim.is_some_and(|d| d > 2) {
        return Err(input_err("--dim must be 0, 1 or 2"));
    }
    let (d1, d2) = (read_diagram(a)?, read_diagram(b)?);
    let dims: Vec<u8> = dim.map_or(vec![0, 1, 2], |d| vec![d]);
    let mut text = String::new();
    for d in dims {
        let r = bottleneck(&d1, &d2, d);
        let row = json!({
            "dim": d,
            "distance": r.distance,
            "n1": d1.count(d),
            "n2": d2.count(d),
        });
        text.push_str(&row.to_string());
        text.push('\n');
    }
    emit(out, &text)
}

fn plot(cfg: PipelineConfig, dim: Option<u8>) -> Result<()> {
    let dgm = read_diagram(&required_input(&cfg)?)?;
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let prov = Provenance::new(echo("plot", &cfg, json!({})), dgm.meta.source_hash);
    let dims: Vec<u8> = match dim {
        Some(d) if d > 2 => return Err(input_err("--dim must be 0, 1 or 2")),
        Some(d) => vec![d],
        None => vec![0, 1, 2],
    };
    let kept = sdph::classify::filter_persistence(&dgm, cfg.min_pers);
    for d in dims {
        let svg = plot_svg_string(&kept, d, cfg.density_sigma, Some(&prov));
        write_text(&dir.join(format!("pd{d}.svg")), &svg)?;
    }
    Ok(())
}

fn check_invariants(out: &PipelineOutput) -> Result<()> {
    if !is_lipschitz(&out.sdf.field) {
        return Err(CliError::Invariant(
            "signed distance is not 1-Lipschitz".into(),
        ));
    }
    let euler = out.diagram.euler_at(out.sdf.field.max_value());
    if euler != 1 {
        return Err(CliError::Invariant(format!(
            "Euler characteristic {euler}, expected 1"
        )));
    }
    Ok(())
}

fn pipeline(cfg: PipelineConfig, seed_flag: Option<&str>, jobs: Option<usize>) -> Result<()> {
    let root = cfg.out.clone().unwrap_or_else(|| PathBuf::from("sdph-out"));
    let seeds = parse_seeds(seed_flag, cfg.seed)?;
    let mut runs: Vec<(PipelineConfig, PathBuf)> = Vec::new();
    match &cfg.preset {
        Some(list) => {
            let presets = parse_presets(list)?;
            let single = presets.len() * seeds.len() == 1;
            for p in presets {
                for &s in &seeds {
                    let run = PipelineConfig {
                        preset: Some(p.to_string()),
                        seed: s,
                        ..cfg.clone()
                    };
                    let dir = if single {
                        root.clone()
                    } else {
                        root.join(format!("{p}_s{s}"))
                    };
                    runs.push((run, dir));
                }
            }
        }
        None => {
            if seeds.len() != 1 {
                return Err(input_err("seed lists only apply to --preset runs"));
            }
            runs.push((
                PipelineConfig {
                    seed: seeds[0],
                    ..cfg.clone()
                },
                root,
            ));
        }
    }
    let results: Vec<Result<String>> = thread_pool(jobs)?.install(|| {
        runs.par_iter()
            .map(|(run, dir)| {
                let out = run_pipeline(run)?;
                check_invariants(&out)?;
                out.write(dir)?;
                let counts: Vec<String> = out
                    .summary
                    .counts
                    .iter()
                    .map(|(t, n)| format!("{t}={n}"))
                    .collect();
                Ok(format!(
                    "{} -> {}  {}",
                    styled("ok", "32"),
                    dir.display(),
                    counts.join(" ")
                ))
            })
            .collect()
    });
    let mut first_err = None;
    for r in results {
        match r {
            Ok(line) => eprintln!("{line}"),
            Err(e) => {
                eprintln!("{} {}", styled("failed:", "31"), e.message());
                first_err.get_or_insert(e);
            }
        }
    }
    first_err.map_or(Ok(()), Err)
}
