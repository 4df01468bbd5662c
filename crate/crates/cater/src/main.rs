use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cater::corpus::{self, GenerateOptions};
use cater::error::{CliError, Result};
use cater::format::{create_dir, write_json, write_jsonl};
use cater::{report, split, tracks, viz};
use cater_core::eval::{combine_trials, diagnose, evaluate, random_trial, Binning, Prediction, Task};
use cater_core::geometry::Point3;
use cater_core::world::{ActorsPerSlot, CameraMode, SceneConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

#[derive(Parser)]
#[command(name = "cater", version, about = "Generate and score CATER-style tabletop corpora")]
struct Cli {
    /// Corpus root directory.
    #[arg(long, global = true, env = "CATER_DATA_DIR", default_value = "cater_data")]
    data_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate episodes, labels and the corpus manifest.
    Generate(GenerateArgs),
    /// Write a train/val/test split manifest.
    Split {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.3)]
        test_fraction: f64,
        #[arg(long, default_value_t = 0.2)]
        val_fraction: f64,
    },
    /// Re-derive every label file from the stored episode metadata.
    Labels {
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Score a predictions file.
    Eval {
        #[command(flatten)]
        target: TargetArgs,
        #[arg(long)]
        predictions: PathBuf,
    },
    /// Score a predictions file per attribute bin.
    Diagnose {
        #[command(flatten)]
        target: TargetArgs,
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long, value_enum, default_value_t = Attribute::LastMoveFrame)]
        attribute: Attribute,
    },
    /// Render a top-down schematic PNG of one episode.
    Viz {
        #[arg(long)]
        episode: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        frame: Option<usize>,
        #[arg(long, default_value_t = 480)]
        size: u32,
        #[arg(long)]
        grid: Option<u32>,
        /// Localization predictions whose scores for this episode are drawn as a heatmap.
        #[arg(long)]
        heatmap: Option<PathBuf>,
    },
    /// Write per-frame snitch pixels and object boxes for each episode.
    ExportTracks {
        #[arg(long, default_value_t = tracks::DEFAULT_BOX)]
        box_size: f64,
        #[arg(long, value_delimiter = ',')]
        episodes: Option<Vec<u64>>,
        /// Defaults to `<data-dir>/tracks`.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Monte-Carlo random-score baseline.
    BaselineRandom {
        #[command(flatten)]
        target: TargetArgs,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct TargetArgs {
    #[arg(long, value_enum)]
    task: TaskArg,
    /// Localization grid resolution.
    #[arg(long, default_value_t = 6)]
    grid: u32,
    /// `all`, `train`, `val`, `final_train` or `test`.
    #[arg(long, default_value = "all")]
    split: String,
    /// Also write the report as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl TargetArgs {
    fn task(&self) -> Task {
        match self.task {
            TaskArg::Atomic => Task::Atomic,
            TaskArg::Compositional => Task::Compositional,
            TaskArg::Localization => Task::Localization { grid: self.grid },
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    Atomic,
    Compositional,
    Localization,
}

#[derive(Clone, Copy, ValueEnum)]
enum Attribute {
    LastMoveFrame,
    ContainedAtEnd,
    DisplacementL1,
    NObjects,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// K = 2 actors per slot.
    Atomic,
    /// Every object may act in every slot.
    Localization,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum, default_value_t = Preset::Atomic)]
    preset: Preset,
    #[arg(long, default_value_t = 5500)]
    episodes: u64,
    /// Derived seeds tried per episode before giving up.
    #[arg(long, default_value_t = 100)]
    max_attempts: u32,
    /// Store every object's state at every frame.
    #[arg(long)]
    full_states: bool,
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    scene: SceneArgs,
}

/// Overrides for every scene parameter; unset flags keep the preset value.
#[derive(Args)]
struct SceneArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_objects_min: Option<u32>,
    #[arg(long)]
    n_objects_max: Option<u32>,
    /// A positive count or `all`.
    #[arg(long, value_parser = parse_actors)]
    actors_per_slot: Option<ActorsPerSlot>,
    #[arg(long)]
    frames: Option<u32>,
    #[arg(long)]
    slot_len: Option<u32>,
    #[arg(long)]
    fps: Option<u32>,
    #[arg(long)]
    plane_half_extent: Option<f64>,
    #[arg(long)]
    grid_resolution: Option<u32>,
    #[arg(long, value_enum)]
    camera_mode: Option<CameraModeArg>,
    #[arg(long)]
    min_action_frames: Option<u32>,
    #[arg(long)]
    lift_height: Option<f64>,
    #[arg(long)]
    move_min: Option<f64>,
    #[arg(long)]
    move_max: Option<f64>,
    #[arg(long)]
    proposal_attempts: Option<u32>,
    #[arg(long)]
    placement_attempts: Option<u32>,
    /// `x,y,z`
    #[arg(long, value_parser = parse_point)]
    static_camera: Option<Point3>,
    #[arg(long)]
    vertical_fov_deg: Option<f64>,
    #[arg(long)]
    image_width: Option<u32>,
    #[arg(long)]
    image_height: Option<u32>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CameraModeArg {
    Static,
    Moving,
}

fn parse_actors(s: &str) -> std::result::Result<ActorsPerSlot, String> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(ActorsPerSlot::All);
    }
    s.parse().map(ActorsPerSlot::Fixed).map_err(|e| format!("{s:?}: {e}"))
}

fn parse_point(s: &str) -> std::result::Result<Point3, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match v[..] {
        [x, y, z] => Ok(Point3::new(x, y, z)),
        _ => Err(format!("expected x,y,z, got {s:?}")),
    }
}

impl SceneArgs {
    fn apply(&self, mut c: SceneConfig) -> SceneConfig {
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { c.$f = v; })* };
        }
        set!(
            seed,
            n_objects_min,
            n_objects_max,
            actors_per_slot,
            frames,
            slot_len,
            fps,
            plane_half_extent,
            grid_resolution,
            min_action_frames,
            lift_height,
            move_min,
            move_max,
            proposal_attempts,
            placement_attempts,
            static_camera,
            vertical_fov_deg,
            image_width,
            image_height
        );
        if let Some(m) = self.camera_mode {
            c.camera_mode = match m {
                CameraModeArg::Static => CameraMode::Static,
                CameraModeArg::Moving => CameraMode::Moving,
            };
        }
        c
    }
}

fn write_report<T: serde::Serialize>(out: &Option<PathBuf>, value: &T) -> Result<()> {
    if let Some(path) = out {
        write_json(path, value)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let root = cli.data_dir.as_path();
    match cli.command {
        Command::Generate(args) => {
            let base = match args.preset {
                Preset::Atomic => SceneConfig::atomic(),
                Preset::Localization => SceneConfig::localization(),
            };
            let opts = GenerateOptions {
                config: args.scene.apply(base),
                n_episodes: args.episodes,
                max_attempts: args.max_attempts,
                full_states: args.full_states,
                threads: args.threads,
            };
            let m = corpus::generate(&opts, root)?;
            let regenerated = m.episodes.iter().filter(|e| e.attempt > 0).count();
            println!("{} episodes in {}", m.n_episodes, root.display());
            println!("episodes regenerated after placement failure: {regenerated}");
            println!("content hash {}", m.content_hash);
        }
        Command::Split {
            seed,
            test_fraction,
            val_fraction,
        } => {
            let m = corpus::load_manifest(root)?;
            let ids: Vec<u64> = m.episodes.iter().map(|e| e.episode_id).collect();
            let s = split::split(&ids, test_fraction, val_fraction, seed)?;
            write_json(&root.join(corpus::SPLITS), &s)?;
            let rows = corpus::load_rows(root)?;
            let hist = corpus::split_histograms(&rows, &s);
            write_json(&root.join(corpus::SPLIT_HISTOGRAMS), &hist)?;
            println!(
                "train {} (final {} + val {}), test {}",
                s.train.len(),
                s.final_train.len(),
                s.val.len(),
                s.test.len()
            );
        }
        Command::Labels { threads } => {
            let r = corpus::relabel(root, threads)?;
            println!("relabeled {} episodes", r.n_episodes);
            if r.previous_hash == r.content_hash {
                println!("content hash unchanged {}", r.content_hash);
            } else {
                println!("content hash changed {} -> {}", r.previous_hash, r.content_hash);
            }
        }
        Command::Eval { target, predictions } => {
            let (preds, truth) = load_target(root, &target, &predictions)?;
            let r = evaluate(&preds, &truth)?;
            print!("{}", report::metrics_table(&r));
            write_report(&target.out, &r)?;
        }
        Command::Diagnose {
            target,
            predictions,
            attribute,
        } => {
            let (preds, truth) = load_target(root, &target, &predictions)?;
            let config = corpus::load_manifest(root)?.config;
            let binning = match attribute {
                Attribute::LastMoveFrame => Binning::LastMoveFrame {
                    slot_len: config.slot_len,
                    frames: config.frames,
                },
                Attribute::ContainedAtEnd => Binning::ContainedAtEnd,
                Attribute::DisplacementL1 => Binning::DisplacementL1 {
                    max: 2 * (config.grid_resolution - 1),
                },
                Attribute::NObjects => Binning::NObjects {
                    min: config.n_objects_min,
                    max: config.n_objects_max,
                },
            };
            let attrs = corpus::load_attributes(root)?;
            let r = diagnose(&preds, &truth, &attrs, binning)?;
            print!("{}", report::diagnostic_table(&r));
            write_report(&target.out, &r)?;
        }
        Command::Viz {
            episode,
            out,
            frame,
            size,
            grid,
            heatmap,
        } => {
            let ep = corpus::load_episode(root, episode)?;
            let grid = grid.unwrap_or(ep.program.config.grid_resolution);
            let heatmap = match heatmap {
                None => None,
                Some(path) => {
                    let preds = corpus::load_predictions(&path, Task::Localization { grid })?;
                    match preds.predictions.get(&episode) {
                        Some(Prediction::Scores(s)) => Some(s.clone()),
                        Some(Prediction::Cell(c)) => {
                            let mut s = vec![0.0; (grid * grid) as usize];
                            if let Some(v) = s.get_mut(*c) {
                                *v = 1.0;
                            }
                            Some(s)
                        }
                        None => {
                            return Err(CliError::Validation(format!(
                                "{}: no prediction for episode {episode}",
                                path.display()
                            )))
                        }
                    }
                }
            };
            let img = viz::render(&ep, &viz::VizOptions { size, frame, grid, heatmap })?;
            let out = match out {
                Some(p) => p,
                None => {
                    create_dir(&root.join("viz"))?;
                    root.join(format!("viz/{episode:06}.png"))
                }
            };
            viz::save_png(&img, &out)?;
            println!("wrote {}", out.display());
        }
        Command::ExportTracks {
            box_size,
            episodes,
            out_dir,
        } => {
            let ids = match episodes {
                Some(ids) => ids,
                None => corpus::load_manifest(root)?.episodes.iter().map(|e| e.episode_id).collect(),
            };
            let out_dir = out_dir.unwrap_or_else(|| root.join("tracks"));
            create_dir(&out_dir)?;
            ids.par_iter()
                .map(|id| {
                    let ep = corpus::load_episode(root, *id)?;
                    let t = tracks::export_tracks(&ep, box_size)?;
                    write_jsonl(&out_dir.join(format!("{id:06}.jsonl")), std::iter::once(&t))?;
                    Ok(())
                })
                .collect::<Result<Vec<()>>>()?;
            println!("wrote {} track files to {}", ids.len(), out_dir.display());
        }
        Command::BaselineRandom { target, trials, seed } => {
            let truth = corpus::load_truth(root, target.task())?;
            let ids = corpus::split_ids(root, &target.split)?;
            let truth = corpus::restrict_truth(&truth, ids.as_deref())?;
            let reports = (0..trials as u64)
                .into_par_iter()
                .map(|t| random_trial(&truth, seed, t))
                .collect::<cater_core::Result<Vec<_>>>()?;
            let b = combine_trials(&truth, &reports)?;
            print!("{}", report::baseline_table(&b));
            write_report(&target.out, &b)?;
        }
    }
    Ok(())
}

fn load_target(
    root: &Path,
    target: &TargetArgs,
    predictions: &Path,
) -> Result<(cater_core::eval::PredictionSet, cater_core::eval::GroundTruth)> {
    let task = target.task();
    let truth = corpus::load_truth(root, task)?;
    let preds = corpus::load_predictions(predictions, task)?;
    let ids = corpus::split_ids(root, &target.split)?;
    let preds = corpus::restrict(&preds, ids.as_deref())?;
    Ok((preds, truth))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
