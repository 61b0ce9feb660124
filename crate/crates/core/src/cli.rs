//! Command-line harness: `run`, `sample`, `report`, `render`, `list`, `client`.

use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use crate::config::{BenchmarkConfig, PlannerChoice};
use crate::error::{Error, Result};
use crate::ingest::{
    sample_random_episodes, save_environment, EpisodeLibrary, EpisodeManifest, SamplerConfig,
};
use crate::metrics::{aggregate_meta, EpisodeMetrics};
use crate::planners::PlannerKind;
use crate::protocol::{
    serve, Client, Endpoint, FlowMode, Listener, ServerConfig, PROTOCOL_VERSION,
};
use crate::render::render_log_frames;
use crate::report::{episode_dir_names, write_reports, Provenance, ReportFiles};
use crate::sim::EpisodeLog;

#[derive(Debug, Parser)]
#[command(
    name = "crowdbench",
    version,
    about = "Replay-based social navigation benchmark"
)]
pub struct Cli {
    /// Log more (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Serve every episode to a planner and write logs and reports.
    Run(RunArgs),
    /// Draw random start/goal episodes from a library.
    Sample(SampleArgs),
    /// Recompute metrics and reports from saved logs.
    Report(ReportArgs),
    /// Render PNG frames from saved logs.
    Render(RenderArgs),
    /// List the episodes of a library.
    List(ListArgs),
    /// Connect a bundled planner to a running server.
    Client(ClientArgs),
}

#[derive(Debug, Args, Default)]
pub struct RunArgs {
    /// TOML config; flags override its values.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// social-forces, orca, baseline or external
    #[arg(long)]
    pub planner: Option<PlannerChoice>,
    /// sync or async
    #[arg(long)]
    pub mode: Option<FlowMode>,
    /// HOST:PORT or unix:PATH for external clients
    #[arg(long)]
    pub bind: Option<String>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Run seed, recorded in provenance.json.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Episode library directory.
    #[arg(long, value_name = "PATH")]
    pub episodes: Option<PathBuf>,
    /// Seconds to wait for an external client.
    #[arg(long, value_name = "SECS")]
    pub accept_timeout: Option<f64>,
    /// Asynchronous ticks per wall-clock second.
    #[arg(long)]
    pub wall_rate: Option<f64>,
    /// Write PNG frames for every tick.
    #[arg(long)]
    pub frames: bool,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// TOML config; flags override its values.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Library to sample from.
    #[arg(long, value_name = "PATH")]
    pub episodes: Option<PathBuf>,
    /// Number of episodes to draw.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub count: u32,
    /// Sampler seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output library directory.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory of a previous `run`.
    pub run: PathBuf,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Directory of a previous `run`.
    pub run: PathBuf,
    /// Library holding the environments the logs refer to.
    #[arg(long, value_name = "PATH")]
    pub episodes: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ListArgs {
    #[arg(long, value_name = "PATH")]
    pub episodes: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClientArgs {
    #[arg(long)]
    pub planner: PlannerKind,
    /// HOST:PORT or unix:PATH
    #[arg(long, default_value = crate::protocol::DEFAULT_BIND)]
    pub connect: String,
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
}

fn base_config(path: Option<&Path>) -> Result<BenchmarkConfig> {
    match path {
        Some(p) => BenchmarkConfig::load(p),
        None => Ok(BenchmarkConfig::default()),
    }
}

impl RunArgs {
    /// Config file (or defaults) with command-line overrides applied.
    pub fn resolve(&self) -> Result<BenchmarkConfig> {
        let mut c = base_config(self.config.as_deref())?;
        if let Some(p) = self.planner {
            c.planner = p;
        }
        if let Some(m) = self.mode {
            c.mode = m;
        }
        if let Some(b) = &self.bind {
            c.bind = b.clone();
        }
        if let Some(o) = &self.out {
            c.out = o.clone();
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(e) = &self.episodes {
            c.episodes = e.clone();
        }
        if let Some(t) = self.accept_timeout {
            c.accept_timeout = t;
        }
        if let Some(w) = self.wall_rate {
            c.wall_rate = Some(w);
        }
        c.frames |= self.frames;
        c.validate()?;
        Ok(c)
    }
}

/// Library named by the config, with the tick-rate override applied.
pub fn load_library(config: &BenchmarkConfig) -> Result<EpisodeLibrary> {
    let mut lib = EpisodeLibrary::load(&config.episodes)?;
    if let Some(rate) = config.tick_rate {
        for ep in &mut lib.episodes {
            ep.tick_rate = rate;
        }
    }
    if lib.is_empty() {
        return Err(Error::invalid(format!(
            "no episodes in {}",
            config.episodes.display()
        )));
    }
    Ok(lib)
}

#[derive(Debug)]
pub struct RunOutcome {
    pub logs: Vec<EpisodeLog>,
    pub reports: ReportFiles,
    pub provenance: PathBuf,
}

/// Serves every episode to the configured planner, then writes logs,
/// metrics, reports, provenance and (optionally) frames under `config.out`.
/// Bundled planners connect over loopback like any external client.
pub fn run_benchmark(config: &BenchmarkConfig) -> Result<RunOutcome> {
    config.validate()?;
    let lib = load_library(config)?;
    let robot = match config.planner {
        PlannerChoice::Bundled(kind) => config
            .robot
            .with_mode(kind.build(&config.planners).control_mode()),
        PlannerChoice::External => config.robot,
    };
    let server = ServerConfig {
        mode: config.mode,
        robot,
        receive_timeout: config.receive_timeout()?,
        wall_rate: config.wall_rate,
    };
    let logs = match config.planner {
        PlannerChoice::Bundled(kind) => {
            let listener = Listener::bind(&Endpoint::Tcp("127.0.0.1:0".into()))?;
            let endpoint = listener.local_endpoint()?;
            let planners = config.planners;
            let timeout = Some(server.receive_timeout);
            let client = std::thread::spawn(move || -> Result<()> {
                let mut planner = kind.build(&planners);
                let mut client = Client::connect(&endpoint, timeout)?;
                client.run_planner(planner.as_mut())?;
                client.close()
            });
            let logs = serve(&lib, &listener, &server, config.accept_timeout()?);
            client
                .join()
                .map_err(|_| Error::Protocol("bundled planner thread panicked".into()))??;
            logs?
        }
        PlannerChoice::External => {
            let endpoint: Endpoint = config.bind.parse()?;
            let listener = Listener::bind(&endpoint)?;
            log::info!("waiting for a client on {}", listener.local_endpoint()?);
            serve(&lib, &listener, &server, config.accept_timeout()?)?
        }
    };
    write_run(config, &lib, &logs)
}

fn write_run(
    config: &BenchmarkConfig,
    lib: &EpisodeLibrary,
    logs: &[EpisodeLog],
) -> Result<RunOutcome> {
    let out = &config.out;
    let dirs = episode_dir_names(logs.iter().map(|l| l.name()));
    for (log, dir) in logs.iter().zip(&dirs) {
        let dir = out.join(dir);
        log.save(&dir)?;
        if config.frames {
            let env = lib.environment(&log.header.environment).ok_or_else(|| {
                Error::invalid(format!("unknown environment `{}`", log.header.environment))
            })?;
            render_log_frames(log, env, &config.render, &dir.join("frames"))?;
        }
    }
    let metrics = logs
        .iter()
        .map(EpisodeMetrics::from_log)
        .collect::<Result<Vec<_>>>()?;
    let meta = aggregate_meta(logs)?;
    let label = config.planner.to_string();
    let reports = write_reports(&label, &metrics, &meta, out)?;
    let provenance = Provenance {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        protocol_version: PROTOCOL_VERSION,
        config_digest: config.digest()?,
        seed: config.seed,
        planner: label,
        mode: match config.mode {
            FlowMode::Sync => "sync".into(),
            FlowMode::Async => "async".into(),
        },
        episodes: logs.iter().map(|l| l.name().to_string()).collect(),
    }
    .write(out)?;
    Ok(RunOutcome {
        logs: logs.to_vec(),
        reports,
        provenance,
    })
}

/// Writes `count` sampled episodes as a self-contained library at `out`:
/// environments, referenced track files and one manifest per episode.
pub fn sample_library(
    config: &BenchmarkConfig,
    count: usize,
    seed: u64,
    out: &Path,
) -> Result<Vec<PathBuf>> {
    let lib = load_library(config)?;
    let sampler = SamplerConfig {
        v_max: config.robot.v_max,
        robot_radius: config.robot.radius,
        ..SamplerConfig::default()
    };
    let episodes = sample_random_episodes(&lib, count, seed, &sampler)?;
    let root = lib.root.clone().unwrap_or_default();
    let env_dir = out.join("environments");
    for ep in &episodes {
        for section in &ep.sections {
            let dst = out.join(&section.track_file);
            if !dst.exists() {
                let src = root.join(&section.track_file);
                if let Some(parent) = dst.parent() {
                    std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
                }
                std::fs::copy(&src, &dst).map_err(|e| Error::io(&src, e))?;
            }
        }
    }
    let used: std::collections::BTreeSet<&str> =
        episodes.iter().map(|e| e.environment.as_str()).collect();
    for name in used {
        save_environment(&lib.environments[name], &env_dir)?;
    }
    let ep_dir = out.join("episodes");
    std::fs::create_dir_all(&ep_dir).map_err(|e| Error::io(&ep_dir, e))?;
    episodes
        .iter()
        .map(|ep| {
            let path = ep_dir.join(format!("{}.json", ep.name));
            std::fs::write(&path, EpisodeManifest::from_episode(ep).to_json()?)
                .map_err(|e| Error::io(&path, e))?;
            Ok(path)
        })
        .collect()
}

/// Episode directories of a run, in the order the run served them.
fn run_log_dirs(run: &Path) -> Result<Vec<PathBuf>> {
    let prov = run.join("provenance.json");
    if prov.is_file() {
        let text = std::fs::read_to_string(&prov).map_err(|e| Error::io(&prov, e))?;
        let p: Provenance = serde_json::from_str(&text)?;
        return Ok(episode_dir_names(p.episodes.iter().map(String::as_str))
            .into_iter()
            .map(|d| run.join(d))
            .collect());
    }
    let mut dirs = Vec::new();
    for entry in std::fs::read_dir(run).map_err(|e| Error::io(run, e))? {
        let path = entry.map_err(|e| Error::io(run, e))?.path();
        if path.join("log.jsonl").is_file() {
            dirs.push(path);
        }
    }
    dirs.sort();
    Ok(dirs)
}

fn run_label(run: &Path) -> String {
    std::fs::read_to_string(run.join("provenance.json"))
        .ok()
        .and_then(|t| serde_json::from_str::<Provenance>(&t).ok())
        .map_or_else(|| "unknown".to_string(), |p| p.planner)
}

/// Recomputes metrics and reports from the logs of a run.
pub fn report_run(run: &Path, out: &Path) -> Result<ReportFiles> {
    let logs = run_log_dirs(run)?
        .iter()
        .map(|d| EpisodeLog::load(d))
        .collect::<Result<Vec<_>>>()?;
    if logs.is_empty() {
        return Err(Error::Report(format!(
            "no episode logs under {}",
            run.display()
        )));
    }
    let metrics = logs
        .iter()
        .map(EpisodeMetrics::from_log)
        .collect::<Result<Vec<_>>>()?;
    write_reports(&run_label(run), &metrics, &aggregate_meta(&logs)?, out)
}

/// Renders frames for every log of a run; returns the number of frames.
pub fn render_run(
    run: &Path,
    lib: &EpisodeLibrary,
    spec: &crate::render::FrameSpec,
    out: &Path,
) -> Result<usize> {
    let mut frames = 0;
    for dir in run_log_dirs(run)? {
        let log = EpisodeLog::load(&dir)?;
        let env = lib.environment(&log.header.environment).ok_or_else(|| {
            Error::invalid(format!(
                "library has no environment `{}`",
                log.header.environment
            ))
        })?;
        if env.digest() != log.header.environment_digest {
            return Err(Error::invalid(format!(
                "environment `{}` differs from the one the log was recorded on",
                env.name
            )));
        }
        let name = dir.file_name().map(PathBuf::from).unwrap_or_default();
        frames += render_log_frames(&log, env, spec, &out.join(name).join("frames"))?.len();
    }
    Ok(frames)
}

fn list(lib: &EpisodeLibrary) {
    println!(
        "{:<24} {:<16} {:>16} {:>16} {:>8} {:>6}",
        "episode", "environment", "start", "goal", "budget", "peds"
    );
    for ep in &lib.episodes {
        println!(
            "{:<24} {:<16} {:>16} {:>16} {:>7.1}s {:>6}",
            ep.name,
            ep.environment,
            format!("({:.2}, {:.2})", ep.robot_start.x, ep.robot_start.y),
            format!("({:.2}, {:.2})", ep.goal.x, ep.goal.y),
            ep.time_budget,
            ep.tracks.len()
        );
    }
}

/// Executes a parsed command line.
pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => {
            let config = args.resolve()?;
            let outcome = run_benchmark(&config)?;
            let meta = aggregate_meta(&outcome.logs)?;
            println!(
                "{}: {} episodes, success {}, failures (T/PC/EC) {}, pedestrian collisions {}",
                config.planner,
                meta.episodes,
                meta.success_fraction(),
                meta.failures,
                meta.total_pedestrian_collisions
            );
            println!("reports in {}", config.out.display());
        }
        Command::Sample(args) => {
            let mut config = base_config(args.config.as_deref())?;
            if let Some(e) = args.episodes {
                config.episodes = e;
            }
            let seed = args.seed.unwrap_or(config.seed);
            let written = sample_library(&config, args.count as usize, seed, &args.out)?;
            println!(
                "wrote {} episode manifests to {}",
                written.len(),
                args.out.join("episodes").display()
            );
        }
        Command::Report(args) => {
            let out = args.out.unwrap_or_else(|| args.run.clone());
            let files = report_run(&args.run, &out)?;
            println!("wrote {}", files.summary.display());
        }
        Command::Render(args) => {
            let mut config = base_config(args.config.as_deref())?;
            config.episodes = args.episodes;
            let lib = EpisodeLibrary::load(&config.episodes)?;
            let out = args.out.unwrap_or_else(|| args.run.clone());
            let n = render_run(&args.run, &lib, &config.render, &out)?;
            println!("rendered {n} frames under {}", out.display());
        }
        Command::List(args) => {
            let mut config = base_config(args.config.as_deref())?;
            if let Some(e) = args.episodes {
                config.episodes = e;
            }
            list(&load_library(&config)?);
        }
        Command::Client(args) => {
            let config = base_config(args.config.as_deref())?;
            let endpoint: Endpoint = args.connect.parse()?;
            let mut planner = args.planner.build(&config.planners);
            let mut client = Client::connect(
                &endpoint,
                Some(Duration::from_secs_f64(config.receive_timeout)),
            )?;
            let ends = client.run_planner(planner.as_mut())?;
            client.close()?;
            for end in ends {
                println!(
                    "{}: {:?} success={}",
                    end.episode, end.termination.kind, end.termination.success
                );
            }
        }
    }
    Ok(())
}
