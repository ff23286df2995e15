//! Command-line surface. Exit codes: 0 success, 1 validation/usage error or a
//! failed check, 2 internal failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::graph::{enumerate_edges, qualify_color_edges, qualify_depth_edges, NeighborhoodSpec};
use crate::io::{
    disparity_to_depth, read_pgm16, write_pgm16, CameraParams, DisparityImage,
};
use crate::io::depth::depth_to_millimeters;
use crate::io::export::{
    fmt_float, save_heatmap_png, save_mask_pgm, save_mask_png, save_prob_png,
    write_gamma_scan_csv, write_landscape_csv, write_sweep_csv, write_trace_csv,
};
use crate::io::{load_scene, save_scene};
use crate::landscape::{
    diagonal_cross_section, offset_antidiagonal_cross_section, sample_surface,
};
use crate::loss::{analyze_gamma, AsymmetryConfig};
use crate::objective::ObjectiveConfig;
use crate::optimize::{optimize_instance, sweep, Modality, RunConfig};
use crate::scene::{generate_scene, Scene, SceneSpec};

#[derive(Parser)]
#[command(
    name = "affinity-lab",
    version,
    about = "Desk-scale experiments on pairwise affinity losses for box-supervised segmentation"
)]
struct Cli {
    /// JSON config file. Interpreted per subcommand: run configuration for
    /// optimize/sweep, scene spec for gen-scenes.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed override applied on top of any config file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModalityArg {
    Depth,
    Color,
}

impl From<ModalityArg> for Modality {
    fn from(m: ModalityArg) -> Self {
        match m {
            ModalityArg::Depth => Modality::Depth,
            ModalityArg::Color => Modality::Color,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sample the two-pixel loss surface and export CSV + heatmap + the two
    /// cross-sections.
    Landscape(LandscapeArgs),
    /// Tabulate the stationary-point analysis for a list of gamma values.
    GammaScan(GammaScanArgs),
    /// Run the full finite-difference gradient suite; nonzero exit on failure.
    Gradcheck(GradcheckArgs),
    /// Generate seeded synthetic scenes into a directory.
    GenScenes(GenScenesArgs),
    /// Export per-direction affinity maps of a scene.
    AffinityMaps(AffinityMapsArgs),
    /// Optimize one instance's logit grid and export its trace.
    Optimize(OptimizeArgs),
    /// Mean-IoU table over a delta × gamma grid.
    Sweep(SweepArgs),
    /// Convert a 16-bit disparity PGM to a millimeter depth PGM.
    ConvertDepth(ConvertDepthArgs),
}

#[derive(Args)]
struct LandscapeArgs {
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    /// Accepts values at or above e for diagnostics.
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    #[arg(long, default_value_t = 201)]
    resolution: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GammaScanArgs {
    /// Comma-separated gamma values.
    #[arg(long, value_delimiter = ',', required = true)]
    gammas: Vec<f64>,
    #[arg(long, default_value = "gamma_scan.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 1000)]
    samples: usize,
}

#[derive(Args)]
struct GenScenesArgs {
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AffinityMapsArgs {
    /// Scene directory (see gen-scenes).
    #[arg(long)]
    scene: PathBuf,
    #[arg(long, value_enum)]
    modality: ModalityArg,
    /// Qualification threshold override (default: depth 0.01, color 0.3).
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long, default_value_t = 0)]
    instance: usize,
    /// Objective preset; see `--preset help` for names.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    out: PathBuf,
    /// Also export recorded mask snapshots as PNG.
    #[arg(long, default_value_t = false)]
    snapshots: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Directory of scene subdirectories to load.
    #[arg(long, conflicts_with = "gen_count")]
    scenes: Option<PathBuf>,
    /// Generate this many single-instance scenes instead of loading.
    #[arg(long)]
    gen_count: Option<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    deltas: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    gammas: Vec<f64>,
    #[arg(long, value_enum, default_value_t = ModalityArg::Depth)]
    modality: ModalityArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ConvertDepthArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Stereo baseline in meters.
    #[arg(long)]
    baseline: Option<f64>,
    /// Focal length in pixels.
    #[arg(long)]
    focal: Option<f64>,
    /// Camera preset; currently `cityscapes`.
    #[arg(long)]
    preset: Option<String>,
}

/// Parse and run. Returns the process exit code.
pub fn dispatch<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };

    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<Error>() {
                Some(err) if err.is_validation() => 1,
                Some(_) => 2,
                None => 2,
            }
        }
    }
}

fn read_json_config<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::file_io(path, e))?;
    let value = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
    Ok(value)
}

fn load_run_config(config: &Option<PathBuf>, seed: Option<u64>) -> anyhow::Result<RunConfig> {
    let mut cfg: RunConfig = match config {
        Some(path) => read_json_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Landscape(args) => {
            if args.delta < 0.0 || args.gamma < 0.0 {
                return Err(Error::InvalidConfig("delta and gamma must be >= 0".into()).into());
            }
            let cfg = AsymmetryConfig::diagnostic(args.delta, args.gamma);
            let sample = sample_surface(&cfg, args.resolution)?;
            write_landscape_csv(&args.out.join("surface.csv"), &sample)?;
            save_heatmap_png(&args.out.join("heatmap.png"), &sample)?;
            write_curve_csv(
                &args.out.join("diagonal.csv"),
                "x,loss",
                &diagonal_cross_section(&sample),
            )?;
            write_curve_csv(
                &args.out.join("antidiagonal.csv"),
                "t,loss",
                &offset_antidiagonal_cross_section(&cfg, args.resolution)?,
            )?;
            println!(
                "landscape delta={} gamma={} resolution={} -> {}",
                args.delta,
                args.gamma,
                args.resolution,
                args.out.display()
            );
            Ok(0)
        }

        Command::GammaScan(args) => {
            let mut rows = Vec::new();
            for &gamma in &args.gammas {
                rows.push(analyze_gamma(gamma)?);
            }
            write_gamma_scan_csv(&args.out, &rows)?;
            for r in &rows {
                println!(
                    "gamma={} argmin_p={} min={} extra_stationary_points={}",
                    r.gamma, r.argmin_p, r.min_value, r.has_extra_stationary_points
                );
            }
            Ok(0)
        }

        Command::Gradcheck(args) => {
            let seed = cli.seed.unwrap_or(0);
            let reports = crate::gradcheck::run_full_suite(args.samples, seed);
            let mut ok = true;
            for r in &reports {
                println!("{r}");
                ok &= r.passed();
            }
            Ok(if ok { 0 } else { 1 })
        }

        Command::GenScenes(args) => {
            let spec: SceneSpec = match &cli.config {
                Some(path) => read_json_config(path)?,
                None => SceneSpec::default(),
            };
            let base_seed = cli.seed.unwrap_or(0);
            for i in 0..args.count {
                let scene = generate_scene(base_seed.wrapping_add(i as u64), &spec)?;
                let dir = args.out.join(format!("scene_{i:03}"));
                save_scene(&scene, &dir)?;
            }
            println!("wrote {} scenes to {}", args.count, args.out.display());
            Ok(0)
        }

        Command::AffinityMaps(args) => {
            let scene = load_scene(&args.scene)?;
            let edges = enumerate_edges(scene.height(), scene.width(), NeighborhoodSpec::default());
            let boxes = scene.boxes();
            let qualified = match args.modality {
                ModalityArg::Depth => qualify_depth_edges(
                    &edges,
                    &scene.depth,
                    args.tau.unwrap_or(0.01),
                    &boxes,
                ),
                ModalityArg::Color => {
                    qualify_color_edges(&edges, &scene.lab, args.tau.unwrap_or(0.3), &boxes)
                }
            };
            let maps = crate::graph::affinity_maps(&qualified);
            for (d, map) in maps.iter().enumerate() {
                save_mask_png(&args.out.join(format!("map_d{d}.png")), map)?;
                save_mask_pgm(&args.out.join(format!("map_d{d}.pgm")), map)?;
            }
            println!(
                "{} affinity maps ({}) -> {}",
                maps.len(),
                Modality::from(args.modality),
                args.out.display()
            );
            Ok(0)
        }

        Command::Optimize(args) => {
            let mut cfg = load_run_config(&cli.config, cli.seed)?;
            if let Some(name) = &args.preset {
                cfg.objective = ObjectiveConfig::preset(name).ok_or_else(|| {
                    Error::InvalidConfig(format!(
                        "unknown preset '{name}'; available: {}",
                        ObjectiveConfig::PRESET_NAMES.join(", ")
                    ))
                })?;
            }
            cfg.record_masks |= args.snapshots;
            let scene = load_scene(&args.scene)?;
            run_optimize(&scene, &args, &cfg)
        }

        Command::Sweep(args) => {
            let cfg = load_run_config(&cli.config, cli.seed)?;
            let scenes: Vec<Scene> = if let Some(dir) = &args.scenes {
                load_scene_dir(dir)?
            } else if let Some(count) = args.gen_count {
                let base_seed = cli.seed.unwrap_or(0);
                (0..count)
                    .map(|i| {
                        generate_scene(
                            base_seed.wrapping_add(i as u64),
                            &SceneSpec::single_instance(),
                        )
                    })
                    .collect::<Result<_, _>>()?
            } else {
                return Err(Error::InvalidConfig(
                    "sweep needs either --scenes or --gen-count".into(),
                )
                .into());
            };
            let table = sweep(
                &scenes,
                &args.deltas,
                &args.gammas,
                args.modality.into(),
                &cfg,
            )?;
            write_sweep_csv(&args.out, &table)?;
            for (gi, &gamma) in table.gammas.iter().enumerate() {
                for (di, &delta) in table.deltas.iter().enumerate() {
                    println!(
                        "delta={delta} gamma={gamma} mean_iou={:.4}",
                        table.mean_iou[gi][di]
                    );
                }
            }
            Ok(0)
        }

        Command::ConvertDepth(args) => {
            let cam = match (&args.preset, args.baseline, args.focal) {
                (Some(name), None, None) if name == "cityscapes" => CameraParams::cityscapes(),
                (Some(name), _, _) if name != "cityscapes" => {
                    return Err(
                        Error::InvalidConfig(format!("unknown camera preset '{name}'")).into(),
                    )
                }
                (_, Some(b), Some(f)) => CameraParams::new(b, f)?,
                _ => {
                    return Err(Error::InvalidConfig(
                        "convert-depth needs --preset cityscapes or both --baseline and --focal"
                            .into(),
                    )
                    .into())
                }
            };
            let raw = read_pgm16(&args.input)?;
            let depth = disparity_to_depth(&DisparityImage { raw }, &cam);
            write_pgm16(&args.output, &depth_to_millimeters(&depth))?;
            let valid = depth.valid.data().iter().filter(|&&v| v).count();
            println!(
                "converted {} ({} valid px) -> {}",
                args.input.display(),
                valid,
                args.output.display()
            );
            Ok(0)
        }
    }
}

fn run_optimize(scene: &Scene, args: &OptimizeArgs, cfg: &RunConfig) -> anyhow::Result<i32> {
    let (logits, trace) = optimize_instance(scene, args.instance, cfg)?;
    fs::create_dir_all(&args.out).map_err(|e| Error::file_io(&args.out, e))?;

    write_trace_csv(&args.out.join("trace.csv"), &trace)?;
    let final_mask = logits.probabilities();
    save_prob_png(&args.out.join("final_mask.png"), &final_mask)?;
    save_mask_png(
        &args.out.join("final_mask_binary.png"),
        &crate::scene::binarize(&final_mask, crate::optimize::BINARIZE_THRESHOLD),
    )?;
    if cfg.record_masks {
        for record in &trace.records {
            if let Some(mask) = &record.mask {
                save_prob_png(
                    &args.out.join(format!("mask_step_{:05}.png", record.step)),
                    mask,
                )?;
            }
        }
    }
    let resolved = serde_json::to_string_pretty(cfg)
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    fs::write(args.out.join("config.json"), resolved)
        .map_err(|e| Error::file_io(args.out.join("config.json"), e))?;

    let last = trace.final_record();
    println!(
        "final step {}: loss {:.6}, iou {:.4}, fill_ratio {:.4}",
        last.step, last.terms.total, last.metrics.iou_gt, last.metrics.fill_ratio
    );
    Ok(0)
}

fn load_scene_dir(dir: &Path) -> anyhow::Result<Vec<Scene>> {
    let mut subdirs: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::file_io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_dir() && p.join("boxes.json").is_file())
        .collect();
    subdirs.sort();
    if subdirs.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "no scene directories under {}",
            dir.display()
        ))
        .into());
    }
    subdirs
        .iter()
        .map(|p| load_scene(p).map_err(Into::into))
        .collect()
}

fn write_curve_csv(path: &Path, header: &str, curve: &[(f64, f64)]) -> anyhow::Result<()> {
    use std::io::Write;
    let mut out = Vec::new();
    writeln!(out, "{header}").unwrap();
    for &(x, v) in curve {
        writeln!(out, "{},{}", fmt_float(x), fmt_float(v)).unwrap();
    }
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::file_io(parent, e))?;
        }
    }
    fs::write(path, out).map_err(|e| Error::file_io(path, e))?;
    Ok(())
}
