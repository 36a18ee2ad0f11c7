//! `nvscope` command-line front end.

pub mod commands;
pub mod manifest;
pub mod scenario;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::analysis::StitchOptions;
use crate::error::{Error, Result};
use commands::{ContourSource, CUBE_FILE, FIELD_FILE};
use scenario::{FitSettings, Scenario};

#[derive(Debug, Parser)]
#[command(
    name = "nvscope",
    version,
    about = "NV-diamond widefield microwave field imaging pipeline"
)]
pub struct Cli {
    /// Scenario JSON file, or `bundled:<name>`.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<String>,
    /// Overrides the scenario noise seed (and turns noise on).
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Worker threads for field evaluation and fitting.
    #[arg(long, global = true, value_name = "N", env = "NVSCOPE_THREADS")]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    pub output: PathBuf,
    /// Check the outputs listed in the command's manifest instead of running it.
    #[arg(long, global = true)]
    pub verify: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Near-field phasor map and sigma± projections.
    Simulate,
    /// Rabi image cube and/or pulse-train stream from a simulated map.
    Acquire {
        /// Field map to drive; defaults to the scenario component in the output dir.
        #[arg(long)]
        field_map: Option<PathBuf>,
    },
    /// Pixel-wise Rabi fits of a cube.
    Fit(FitArgs),
    /// Composite of overlapping tile maps.
    Stitch {
        #[arg(required = true)]
        tiles: Vec<PathBuf>,
        /// Refine tile offsets by cross-correlation.
        #[arg(long)]
        refine: bool,
    },
    /// Line cut, insertion loss, trap, dynamic range and sensitivity.
    Report {
        #[arg(long)]
        map: Option<PathBuf>,
    },
    /// Iso-B contours of one Rabi frame.
    Contours {
        /// Cube to take the frame from; without it a frame is simulated.
        #[arg(long)]
        cube: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        frame: usize,
        /// Pulse length for a simulated frame, ns.
        #[arg(long)]
        dt_ns: Option<f64>,
    },
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Defaults to cube.rcub in the output dir.
    pub cube: Option<PathBuf>,
    /// Minimum converged pixel fraction before exiting nonzero.
    #[arg(long)]
    pub min_converged: Option<f64>,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Acquire { .. } => "acquire",
            Command::Fit(_) => "fit",
            Command::Stitch { .. } => "stitch",
            Command::Report { .. } => "report",
            Command::Contours { .. } => "contours",
        }
    }
}

fn scenario(cli: &Cli) -> Result<(Scenario, String)> {
    let spec = cli
        .config
        .as_deref()
        .ok_or_else(|| Error::config("--config", "this command needs a scenario"))?;
    let (sc, text) = Scenario::load(spec)?;
    Ok((cli.seed.map_or(sc.clone(), |s| sc.with_seed(s)), text))
}

fn execute(cli: &Cli) -> Result<String> {
    let out = cli.output.as_path();
    if cli.verify {
        let m = manifest::verify_outputs(out, cli.command.name())?;
        return Ok(format!("verified {} outputs of {}", m.outputs.len(), m.command));
    }
    std::fs::create_dir_all(out).map_err(|e| Error::config("--output", format!("{}: {e}", out.display())))?;
    match &cli.command {
        Command::Simulate => {
            let (sc, text) = scenario(cli)?;
            let r = commands::cmd_simulate(&sc, Some(&text), out)?;
            Ok(format!(
                "simulate {}: sigma+ max {:.3} uT, sigma- max {:.3} uT",
                sc.name,
                r.sigma_plus.max() * 1e6,
                r.sigma_minus.max() * 1e6
            ))
        }
        Command::Acquire { field_map } => {
            let (sc, text) = scenario(cli)?;
            let r = commands::cmd_acquire(&sc, Some(&text), out, field_map.as_deref())?;
            let mut parts = Vec::new();
            if let Some(c) = &r.cube {
                parts.push(format!("{} frames", c.frames.len()));
            }
            if let Some(s) = &r.stream {
                parts.push(format!("{} stream frames", s.frames.len()));
            }
            Ok(format!("acquire {}: {}", sc.name, parts.join(", ")))
        }
        Command::Fit(args) => {
            let mut settings = match &cli.config {
                Some(_) => scenario(cli)?.0.fit,
                None => FitSettings::default(),
            };
            if let Some(f) = args.min_converged {
                if !(0.0..=1.0).contains(&f) {
                    return Err(Error::config("--min-converged", "must lie in [0, 1]"));
                }
                settings.min_converged_fraction = f;
            }
            let cube = args.cube.clone().unwrap_or_else(|| out.join(CUBE_FILE));
            let r = commands::cmd_fit(&cube, &settings, out)?;
            Ok(format!(
                "fit: {} pixels, {:.1}% converged, median field {:.3} uT -> {}",
                r.diagnostics.n_pixels,
                100.0 * r.diagnostics.converged_fraction,
                r.diagnostics.median_field_t * 1e6,
                out.join(FIELD_FILE).display()
            ))
        }
        Command::Stitch { tiles, refine } => {
            let opts = StitchOptions {
                refine: *refine,
                ..StitchOptions::default()
            };
            let (_, map) = commands::cmd_stitch(tiles, &opts, out)?;
            Ok(format!(
                "stitch: {} tiles -> {}x{}",
                tiles.len(),
                map.grid.nx,
                map.grid.ny
            ))
        }
        Command::Report { map } => {
            let (sc, text) = scenario(cli)?;
            let (_, report) = commands::cmd_report(&sc, Some(&text), map.as_deref(), out)?;
            Ok(serde_json::to_string_pretty(&report)?)
        }
        Command::Contours { cube, frame, dt_ns } => {
            let (sc, text) = scenario(cli)?;
            let source = match cube {
                Some(path) => ContourSource::Cube {
                    path: path.clone(),
                    frame: *frame,
                },
                None => ContourSource::Simulated { dt_mw_ns: *dt_ns },
            };
            let (_, set) = commands::cmd_contours(&sc, Some(&text), &source, out)?;
            Ok(format!(
                "contours: {} ridges at dt {} ns",
                set.ridges.len(),
                set.dt_mw_ns
            ))
        }
    }
}

fn init_threads(threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::config("--threads", "must be at least 1"));
        }
        // a pool may already exist when called repeatedly in-process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match init_threads(cli.threads).and_then(|_| execute(&cli)) {
        Ok(msg) => {
            // a closed pipe (e.g. `| head`) is not a failure
            let _ = writeln!(std::io::stdout(), "{msg}");
            0
        }
        Err(e) => {
            eprintln!("nvscope {}: {e}", cli.command.name());
            e.exit_code()
        }
    }
}
