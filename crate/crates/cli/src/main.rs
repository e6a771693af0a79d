//! Command-line front end: `plan`, `benchmark`, `corpus`, `defaults`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use slicegrasp::geometry::export_scene;
use slicegrasp::gripper::GripperParams;
use slicegrasp::parallel::Execution;
use slicegrasp::planner::corpus::write_corpus;
use slicegrasp::planner::{
    benchmark, gripper_config_text, load_gripper, plan, write_benchmark_csv, write_slices_csv, PlanInput, PlanOptions,
    PlannerConfig, DEFAULT_PLANNER_TOML,
};
use slicegrasp::quality::HullMeasure;

#[derive(Parser)]
#[command(name = "slicegrasp", version, about = "Slice-based grasp planner for two-finger underactuated grippers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan grasps for one object.
    Plan(PlanArgs),
    /// Plan every object in a directory and write a summary CSV.
    Benchmark(BenchArgs),
    /// Write the synthetic test corpus and a default gripper config.
    Corpus {
        #[arg(long)]
        out: PathBuf,
        /// Also write an object too large for the default gripper.
        #[arg(long)]
        oversized: bool,
    },
    /// Print the default planner or gripper config.
    Defaults {
        #[arg(value_enum, default_value_t = Which::Planner)]
        which: Which,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Planner,
    Gripper,
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    Epsilon,
    Volume,
}

#[derive(Args)]
struct Common {
    /// Gripper config (TOML with declared units).
    #[arg(long)]
    gripper: Option<PathBuf>,
    /// Planner config (TOML); its `gripper` key is used when --gripper is absent.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long, value_enum)]
    metric: Option<Metric>,
    #[arg(long)]
    cone_sides: Option<usize>,
    /// Angular pool step in degrees.
    #[arg(long, value_name = "DEG")]
    sampling_step: Option<f64>,
    #[arg(long)]
    cyl_levels: Option<usize>,
    /// Palm clearance from the enclosing surface (mm).
    #[arg(long)]
    standoff_margin: Option<f64>,
    /// Worker threads; 1 runs sequentially.
    #[arg(long)]
    threads: Option<usize>,
    /// Skip mesh-based joint refinement.
    #[arg(long)]
    no_refine: bool,
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    mesh: Option<PathBuf>,
    #[arg(long)]
    cloud: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// OBJ scene of the object, posed gripper and contacts.
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Per-candidate slices and closure traces as CSV (default: next to --out).
    #[arg(long, value_name = "CSV")]
    debug_slices: Option<Option<PathBuf>>,
    /// Octree leaf boxes as an OBJ wireframe.
    #[arg(long, value_name = "OBJ")]
    octree_dump: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    common: Common,
}

fn setup(c: &Common, fallback_gripper: Option<&Path>) -> Result<(GripperParams, PlannerConfig, Execution)> {
    let mut cfg = match &c.config {
        Some(p) => PlannerConfig::load(p)?,
        None => PlannerConfig::default(),
    };
    let gripper_path = c.gripper.clone().or_else(|| cfg.gripper.clone()).or_else(|| fallback_gripper.map(Path::to_path_buf));
    let gripper = match gripper_path {
        Some(p) => load_gripper(&p).with_context(|| format!("reading gripper {}", p.display()))?,
        None => bail!("no gripper config: pass --gripper or set `gripper` in the planner config"),
    };
    if let Some(mu) = c.mu {
        cfg.quality.mu = mu;
    }
    if let Some(m) = c.metric {
        cfg.quality.measure = match m {
            Metric::Epsilon => HullMeasure::Epsilon,
            Metric::Volume => HullMeasure::Volume,
        };
    }
    if let Some(n) = c.cone_sides {
        cfg.quality.cone_sides = n;
    }
    if let Some(s) = c.sampling_step {
        cfg.sampling.step_deg = s;
    }
    if let Some(l) = c.cyl_levels {
        cfg.sampling.cylinder_levels = l;
    }
    if let Some(m) = c.standoff_margin {
        cfg.sampling.standoff_margin = Some(m);
    }
    if c.no_refine {
        cfg.refine.enabled = false;
    }
    if c.threads == Some(0) {
        bail!("--threads must be at least 1");
    }
    cfg.validate()?;
    Ok((gripper, cfg, Execution::from_threads(c.threads)))
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn run_plan(a: &PlanArgs) -> Result<ExitCode> {
    if a.mesh.is_none() && a.cloud.is_none() {
        bail!("pass --mesh and/or --cloud");
    }
    let (gripper, cfg, exec) = setup(&a.common, None)?;
    let input = PlanInput::load(a.mesh.as_deref(), a.cloud.as_deref(), cfg.input.weld_tol)?;
    let opts = PlanOptions { exec, keep_slices: a.debug_slices.is_some() };
    let result = plan(&input, &gripper, &cfg, &opts)?;

    write(&a.out, &result.output.to_json())?;
    if let Some(path) = &a.debug_slices {
        let path = path.clone().unwrap_or_else(|| a.out.with_extension("slices.csv"));
        write_slices_csv(&result.slices, &path)?;
    }
    if let Some(path) = &a.octree_dump {
        write(path, &result.octree.leaf_wireframe_obj())?;
    }
    if let Some(path) = &a.scene {
        let mesh = input.mesh.as_ref().context("--scene needs a mesh")?;
        match result.best_scene(&gripper) {
            Some((links, contacts)) => export_scene(mesh, &links, &contacts, 0.1 * gripper.finger_width, path)?,
            None => eprintln!("no grasp found; scene not written"),
        }
    }

    let out = &result.output;
    println!("{} ({:?})", out.report.table_row(), out.class);
    if let Some(b) = &out.best {
        println!(
            "best: pool {} rank {}, eps {:.4}, Q {:.4}, refined {}",
            b.pool_index, b.rank, b.quality.epsilon, b.quality.q, b.refined
        );
        if let Some(e) = &b.refine_error {
            eprintln!("refinement: {e}");
        }
    }
    Ok(if out.report.found == 0 { ExitCode::from(2) } else { ExitCode::SUCCESS })
}

fn run_benchmark(a: &BenchArgs) -> Result<ExitCode> {
    let fallback = a.corpus.join("gripper.toml");
    let (gripper, cfg, exec) = setup(&a.common, fallback.is_file().then_some(fallback.as_path()))?;
    let rows = benchmark(&a.corpus, &gripper, &cfg, &PlanOptions { exec, keep_slices: false })?;
    write_benchmark_csv(&rows, &a.out)?;
    for r in &rows {
        match &r.error {
            Some(e) => println!("{}: error: {e}", r.object),
            None => {
                let per = r.time_per_grasp_s.map_or("n/a".to_string(), |t| format!("{t:.4} s/grasp"));
                println!("{}: {} tested, {} found, {:.2} s total, {}", r.object, r.tested, r.found, r.total_time_s, per);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: &Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Plan(a) => run_plan(a),
        Command::Benchmark(a) => run_benchmark(a),
        Command::Corpus { out, oversized } => {
            let files = write_corpus(out, *oversized)?;
            for f in files {
                println!("{}", f.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Defaults { which } => {
            match which {
                Which::Planner => print!("{DEFAULT_PLANNER_TOML}"),
                Which::Gripper => print!("{}", gripper_config_text(&GripperParams::default())),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    // clap's own usage-error code would collide with "no grasp found"
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            // library errors already embed their sources
            let mut msg = e.to_string();
            for cause in e.chain().skip(1) {
                let c = cause.to_string();
                if !msg.contains(&c) {
                    msg = format!("{msg}: {c}");
                }
            }
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
