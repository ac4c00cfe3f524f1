use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use blockflow::bench::bench_engine;
use blockflow::io::{self, EventReadOptions, FlowRecord};
use blockflow::metrics::evaluate_velocities;
use blockflow::render::{render_svg, RenderOptions};
use blockflow::synth::{generate, SceneKind, SceneSpec};
use blockflow::timing_model::{cycles_per_event, speedup_vs_software, HardwareConfig};
use blockflow::{
    dominant_direction, radius_sweep, BorderPolicy, FlowConfig, FlowEngine, RegressionPolicy, SensorGeometry, Velocity,
};

#[derive(Parser)]
#[command(name = "blockflow", version, about = "Block-matching optical flow for DVS event streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute flow events from an event CSV.
    Flow {
        #[arg(long)]
        input: PathBuf,
        /// Flow CSV destination (stdout if omitted).
        #[arg(long)]
        output: Option<PathBuf>,
        /// Stats JSON destination.
        #[arg(long)]
        stats: Option<PathBuf>,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Score a flow CSV against ground truth; prints an error report as JSON.
    Eval {
        #[arg(long)]
        flow: PathBuf,
        #[arg(long)]
        truth: PathBuf,
    },
    /// Draw flow arrows over the event raster as SVG.
    Render {
        #[arg(long)]
        flow: PathBuf,
        #[arg(long)]
        events: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 240)]
        width: u16,
        #[arg(long, default_value_t = 180)]
        height: u16,
        #[arg(long, default_value_t = 4.0)]
        scale: f64,
    },
    /// Hardware cycle model report as JSON.
    Timing {
        #[arg(long, default_value_t = 9)]
        block_dim: u32,
        #[arg(long, default_value_t = 50e6)]
        clock_hz: f64,
        /// Software time per event in microseconds, for the speedup figure.
        #[arg(long)]
        software_us: Option<f64>,
    },
    /// AAE/AEE for each block radius; prints CSV.
    Sweep {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6,7")]
        radii: Vec<u32>,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Single-threaded engine throughput on an event CSV.
    Bench {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 1)]
        repeat: u32,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Generate a synthetic scene with ground truth.
    Synth {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long, default_value_t = 100.0, allow_negative_numbers = true)]
        vx: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        vy: f64,
        #[arg(long, default_value_t = 200_000)]
        duration_us: u64,
        #[arg(long)]
        density: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        noise_rate: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 240)]
        width: u16,
        #[arg(long, default_value_t = 180)]
        height: u16,
        #[arg(long)]
        events: PathBuf,
        #[arg(long)]
        truth: PathBuf,
    },
}

#[derive(Args, Clone)]
struct EngineArgs {
    #[arg(long, default_value_t = 40_000)]
    slice_us: u64,
    #[arg(long, default_value_t = 4)]
    radius: u32,
    #[arg(long, default_value_t = 1)]
    downsample: u32,
    #[arg(long, default_value_t = 240)]
    width: u16,
    #[arg(long, default_value_t = 180)]
    height: u16,
    #[arg(long, value_enum, default_value_t = BorderArg::Zeropad)]
    border: BorderArg,
    #[arg(long, default_value_t = 0)]
    min_active: u32,
    /// Drop events whose timestamp goes backwards instead of failing.
    #[arg(long)]
    drop_regressions: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum BorderArg {
    Zeropad,
    Skip,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Edge,
    Dots,
    Texture,
}

impl EngineArgs {
    fn geometry(&self) -> Result<SensorGeometry> {
        Ok(SensorGeometry::new(self.width, self.height)?)
    }

    fn regression(&self) -> RegressionPolicy {
        if self.drop_regressions {
            RegressionPolicy::Drop
        } else {
            RegressionPolicy::Error
        }
    }

    fn config(&self) -> Result<FlowConfig> {
        let config = FlowConfig {
            slice_duration_us: self.slice_us,
            block_radius: self.radius,
            downsample_n: self.downsample,
            min_active_pixels: self.min_active,
            border_policy: match self.border {
                BorderArg::Zeropad => BorderPolicy::ZeroPad,
                BorderArg::Skip => BorderPolicy::SkipEvent,
            },
            regression_policy: self.regression(),
        };
        config.validate()?;
        Ok(config)
    }

    fn read_events(&self, path: &Path) -> Result<Vec<blockflow::DvsEvent>> {
        let options = EventReadOptions { geometry: self.geometry()?, regression: self.regression() };
        io::read_events_file(path, &options).with_context(|| format!("reading events from {}", path.display()))
    }
}

fn print_json(value: &serde_json::Value) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Flow { input, output, stats, engine: args } => {
            let events = args.read_events(&input)?;
            let mut engine = FlowEngine::new(args.geometry()?, args.config()?)?;
            let flow = engine.run(&events)?;
            let total = engine.total_histogram();
            let (_, engine_stats) = engine.finish();
            let records = flow.iter().map(FlowRecord::from);
            match &output {
                Some(path) => io::write_flow(io::create(path)?, records)?,
                None => io::write_flow(std::io::stdout().lock(), records)?,
            }
            let report = json!({
                "stats": engine_stats,
                "histogram": total.counts,
                "dominant_direction": dominant_direction(&total).ok().map(|d| d.name()),
            });
            match (&stats, &output) {
                (Some(path), _) => {
                    let mut w = io::create(path)?;
                    serde_json::to_writer_pretty(&mut w, &report)?;
                    writeln!(w)?;
                }
                (None, Some(_)) => print_json(&report)?,
                (None, None) => eprintln!("{}", serde_json::to_string_pretty(&report)?),
            }
        }
        Command::Eval { flow, truth } => {
            let records = io::read_flow_file(&flow).with_context(|| format!("reading flow from {}", flow.display()))?;
            let truth = io::read_truth_file(&truth).with_context(|| format!("reading truth from {}", truth.display()))?;
            let report = evaluate_velocities(records.iter().map(|r| (r.timestamp, r.velocity)), &truth)?;
            print_json(&serde_json::to_value(report)?)?;
        }
        Command::Render { flow, events, output, width, height, scale } => {
            let geometry = SensorGeometry::new(width, height)?;
            let records = io::read_flow_file(&flow).with_context(|| format!("reading flow from {}", flow.display()))?;
            let options = EventReadOptions { geometry, regression: RegressionPolicy::Error };
            let events = io::read_events_file(&events, &options)
                .with_context(|| format!("reading events from {}", events.display()))?;
            let svg = render_svg(geometry, &events, &records, &RenderOptions { scale, ..Default::default() })?;
            std::fs::write(&output, svg).with_context(|| format!("writing {}", output.display()))?;
        }
        Command::Timing { block_dim, clock_hz, software_us } => {
            let config = HardwareConfig::new(clock_hz, block_dim)?;
            let report = cycles_per_event(&config)?;
            let mut value = serde_json::to_value(&report)?;
            if let Some(us) = software_us {
                value["speedup_vs_software"] = json!(speedup_vs_software(&report, us)?);
            }
            print_json(&value)?;
        }
        Command::Sweep { input, truth, radii, engine: args } => {
            if radii.is_empty() {
                bail!("--radii needs at least one value");
            }
            let events = args.read_events(&input)?;
            let truth = io::read_truth_file(&truth).with_context(|| format!("reading truth from {}", truth.display()))?;
            let reports = radius_sweep(&events, args.geometry()?, &truth, &radii, args.config()?)?;
            let mut out = std::io::stdout().lock();
            writeln!(out, "radius,aae_deg,aee_pps")?;
            for (radius, r) in reports {
                writeln!(out, "{radius},{},{}", r.aae_mean, r.aee_mean)?;
            }
        }
        Command::Bench { input, repeat, engine: args } => {
            let events = args.read_events(&input)?;
            if events.is_empty() {
                bail!("{} holds no events", input.display());
            }
            let (geometry, config) = (args.geometry()?, args.config()?);
            let runs = (0..repeat.max(1))
                .map(|_| bench_engine(&events, geometry, config))
                .collect::<Result<Vec<_>, _>>()?;
            let best = runs.iter().copied().max_by(|a, b| a.events_per_second.total_cmp(&b.events_per_second));
            print_json(&json!({ "runs": runs, "best": best }))?;
        }
        Command::Synth { kind, vx, vy, duration_us, density, noise_rate, seed, width, height, events, truth } => {
            let kind = match kind {
                KindArg::Edge => SceneKind::Edge,
                KindArg::Dots => SceneKind::SparseDots,
                KindArg::Texture => SceneKind::DenseTexture,
            };
            let mut spec = SceneSpec::new(kind, Velocity::new(vx, vy), duration_us);
            spec.geometry = SensorGeometry::new(width, height)?;
            if let Some(density) = density {
                spec.density = density;
            }
            spec.noise_rate = noise_rate;
            spec.seed = seed;
            let scene = generate(&spec)?;
            io::write_events(io::create(&events)?, &scene.events)?;
            io::write_truth(io::create(&truth)?, &scene.truth)?;
            eprintln!("{} events", scene.events.len());
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
