//! The `sib` command-line tool.
//!
//! Exit codes: 0 success, 1 invalid program, 2 I/O failure, 3 program ended
//! with a runtime error, 4 the server could not bind. Diagnostics go to
//! stderr; stdout carries only machine-readable output.

pub mod bench;
pub mod plot;

use clap::{Parser, Subcommand};
use serde_json::json;
use sib_core::engine::{Engine, EngineEvent, LiveHost, Pace};
use sib_core::lang::{parse, serialize, BlockProgram, ExecStatus, RuntimeParams};
use sib_core::sim::{preview_run, PreviewOptions, SimConfig, Trace};
use sib_station::{topic_payload, Station, StationConfig, StationError};
use std::future::Future;
use std::io::{BufRead, IsTerminal, Write};
use std::net::{IpAddr, Ipv4Addr};
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::time::{Duration, Instant};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_RUN_ERROR: i32 = 3;
pub const EXIT_BIND: i32 = 4;

/// Environment variable naming a directory of built UI assets for `serve`.
pub const UI_DIR_ENV: &str = "SIB_UI_DIR";

#[derive(Debug, Parser)]
#[command(name = "sib", version, about = "Block-based drone swarm programming")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a program file and print its canonical form.
    Validate { path: PathBuf },
    /// Run a program against a local simulator.
    Run {
        path: PathBuf,
        #[arg(long, default_value_t = 4)]
        drones: usize,
        /// Run as fast as possible instead of in real time.
        #[arg(long)]
        preview: bool,
        /// Write the per-tick trace (JSON lines).
        #[arg(long, value_name = "OUT")]
        trace: Option<PathBuf>,
        /// Write an SVG plot of the trajectories.
        #[arg(long, value_name = "OUT")]
        plot: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Measure the real-time factor for several swarm sizes; CSV on stdout.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "1,2,5,10,20,50")]
        drones: Vec<usize>,
        /// Simulated seconds per run.
        #[arg(long, default_value_t = 10.0)]
        duration: f64,
        #[arg(long, default_value_t = 5)]
        runs: usize,
    },
    /// Serve the operator station until interrupted.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value_t = 4)]
        drones: usize,
        #[arg(long = "dt-ms", default_value_t = 50)]
        dt_ms: u64,
        #[arg(long = "programs", value_name = "DIR", default_value = "programs")]
        programs: PathBuf,
    },
}

/// Parses arguments and runs the command. Returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_IO } else { EXIT_OK };
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Validate { path } => validate(&path, &mut out),
        Command::Run {
            path,
            drones,
            preview,
            trace,
            plot,
            seed,
        } => {
            let opts = RunOptions {
                drones,
                preview,
                trace,
                plot,
                seed,
            };
            run(&path, &opts, &mut out)
        }
        Command::Bench { drones, duration, runs } => bench_cmd(&drones, duration, runs, &mut out),
        Command::Serve {
            port,
            drones,
            dt_ms,
            programs,
        } => {
            let mut config = StationConfig::new(programs);
            config.bind = IpAddr::V4(Ipv4Addr::UNSPECIFIED);
            config.port = port;
            config.drones = drones;
            config.sim.tick_dt = dt_ms as f64 / 1000.0;
            config.static_dir = std::env::var_os(UI_DIR_ENV).map(PathBuf::from);
            serve(config, ctrl_c(), &mut out)
        }
    }
}

fn read_program(path: &Path) -> Result<BlockProgram, i32> {
    let bytes = std::fs::read(path).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        EXIT_IO
    })?;
    parse(&bytes).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        EXIT_INVALID
    })
}

pub fn validate(path: &Path, out: &mut impl Write) -> i32 {
    match read_program(path) {
        Ok(p) => {
            let _ = out.write_all(&serialize(&p));
            let _ = out.write_all(b"\n");
            EXIT_OK
        }
        Err(code) => code,
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub drones: usize,
    pub preview: bool,
    pub trace: Option<PathBuf>,
    pub plot: Option<PathBuf>,
    pub seed: u64,
}

pub fn run(path: &Path, opts: &RunOptions, out: &mut impl Write) -> i32 {
    let program = match read_program(path) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let config = SimConfig {
        seed: opts.seed,
        ..SimConfig::default()
    };
    let result = if opts.preview {
        preview(&program, config, opts.drones)
    } else {
        live(&program, config, opts.drones, out)
    };
    let (trace, status) = match result {
        Ok(r) => r,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_INVALID;
        }
    };
    if let Some(p) = &opts.trace {
        let written = std::fs::File::create(p).and_then(|f| trace.write_jsonl(std::io::BufWriter::new(f)));
        if let Err(e) = written {
            eprintln!("error: {}: {e}", p.display());
            return EXIT_IO;
        }
    }
    if let Some(p) = &opts.plot {
        if let Err(e) = std::fs::write(p, plot::trace_svg(&trace)) {
            eprintln!("error: {}: {e}", p.display());
            return EXIT_IO;
        }
    }
    let summary = json!({
        "status": format!("{status:?}"),
        "entries": trace.len(),
        "sim_time": trace.entries.last().map_or(0.0, |e| e.sim_time),
        "error": trace.error,
        "trace": opts.trace,
        "plot": opts.plot,
    });
    let _ = writeln!(out, "{summary}");
    match &trace.error {
        Some(msg) => {
            eprintln!("error: {msg}");
            EXIT_RUN_ERROR
        }
        None => EXIT_OK,
    }
}

/// Answers for preview prompts: one number per stdin line, when stdin is piped.
fn piped_answers() -> Vec<f64> {
    let stdin = std::io::stdin();
    if stdin.is_terminal() {
        return Vec::new();
    }
    stdin
        .lock()
        .lines()
        .map_while(Result::ok)
        .filter_map(|l| l.trim().parse().ok())
        .collect()
}

fn preview(program: &BlockProgram, config: SimConfig, n: usize) -> Result<(Trace, ExecStatus), String> {
    let answers = if program.walk().any(|b| b.kind == sib_core::lang::BlockKind::Prompt) {
        piped_answers()
    } else {
        Vec::new()
    };
    let options = PreviewOptions {
        config,
        answers,
        ..PreviewOptions::default()
    };
    let trace = preview_run(program, RuntimeParams::default(), n, &options).map_err(|e| e.to_string())?;
    let status = if trace.error.is_some() {
        ExecStatus::Errored
    } else {
        ExecStatus::Done
    };
    Ok((trace, status))
}

/// Real-time run: topic events are printed as JSON lines while it runs and
/// prompts are answered from stdin.
fn live(program: &BlockProgram, config: SimConfig, n: usize, out: &mut impl Write) -> Result<(Trace, ExecStatus), String> {
    let engine = Engine::new(config, n, 1.0).map_err(|e| e.to_string())?;
    let (tx, rx) = mpsc::channel();
    let host = LiveHost::spawn(engine, Pace::RealTime, move |events| {
        let _ = tx.send(events);
    });
    let handle = host.handle();
    let p = program.clone();
    let run_id = handle
        .call(move |e| e.run(&p))
        .ok_or("engine stopped")?
        .map_err(|e| e.to_string())?;
    let mut finished = false;
    while !finished {
        let Ok(batch) = rx.recv() else { break };
        for s in batch {
            if matches!(s.event, EngineEvent::Telemetry(_) | EngineEvent::Sim(_)) {
                continue;
            }
            let (topic, payload) = topic_payload(&s);
            let _ = writeln!(out, "{}", json!({ "topic": topic, "payload": payload }));
            match s.event {
                EngineEvent::Prompt { .. } => {
                    let mut line = String::new();
                    let answer = match std::io::stdin().read_line(&mut line) {
                        Ok(_) => line.trim().parse::<f64>().ok(),
                        Err(_) => None,
                    };
                    match answer {
                        Some(v) => {
                            let _ = handle.call(move |e| e.answer_prompt(v));
                        }
                        None => {
                            let _ = handle.call(|e| e.abort("prompt was not answered with a number"));
                        }
                    }
                }
                EngineEvent::Running(false) => finished = true,
                _ => {}
            }
        }
        let _ = out.flush();
    }
    // let the swarm come to rest before reporting
    let deadline = Instant::now() + Duration::from_secs(60);
    while Instant::now() < deadline && !handle.call(|e| e.sim().is_settled()).unwrap_or(true) {
        std::thread::sleep(Duration::from_millis(20));
    }
    let engine = host.shutdown();
    let trace = engine.trace(run_id).cloned().unwrap_or_default();
    Ok((trace, engine.status()))
}

pub fn bench_cmd(sizes: &[usize], duration: f64, runs: usize, out: &mut impl Write) -> i32 {
    if sizes.is_empty() || runs == 0 || !(duration > 0.0 && duration.is_finite()) {
        eprintln!("error: bench needs at least one size, runs >= 1 and a positive duration");
        return EXIT_INVALID;
    }
    match bench::bench(sizes, duration, runs) {
        Ok(report) => {
            let _ = out.write_all(report.to_csv().as_bytes());
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
    }
}

/// Resolves on the first Ctrl-C.
pub fn ctrl_c() -> impl Future<Output = ()> + Send + 'static {
    let (tx, rx) = tokio::sync::oneshot::channel::<()>();
    let mut tx = Some(tx);
    let _ = ctrlc::set_handler(move || {
        if let Some(tx) = tx.take() {
            let _ = tx.send(());
        }
    });
    async move {
        let _ = rx.await;
    }
}

/// Serves until `shutdown` resolves, then lands every drone and exits.
/// Prints `{"listening": addr}` once bound and a final report on shutdown.
pub fn serve<F>(config: StationConfig, shutdown: F, out: &mut impl Write) -> i32
where
    F: Future<Output = ()> + Send + 'static,
{
    let runtime = match tokio::runtime::Builder::new_multi_thread().enable_all().build() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("error: cannot start runtime: {e}");
            return EXIT_IO;
        }
    };
    runtime.block_on(async move {
        let station = match Station::start(config).await {
            Ok(s) => s,
            Err(e @ StationError::BindFailure { .. }) => {
                eprintln!("error: {e}");
                return EXIT_BIND;
            }
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_IO;
            }
        };
        let _ = writeln!(out, "{}", json!({ "listening": station.addr().to_string() }));
        let _ = out.flush();
        shutdown.await;

        eprintln!("shutting down: landing all drones");
        let engine = station.engine();
        let airborne = tokio::task::spawn_blocking(move || {
            let airborne = engine
                .call(|e| {
                    let n = e.drones().iter().filter(|d| d.mode.is_airborne()).count();
                    e.land_all();
                    n
                })
                .unwrap_or(0);
            // landing at max speed from any sane altitude takes seconds, not minutes
            let deadline = Instant::now() + Duration::from_secs(30);
            while Instant::now() < deadline && !engine.call(|e| e.sim().is_settled()).unwrap_or(true) {
                std::thread::sleep(Duration::from_millis(20));
            }
            airborne
        })
        .await
        .unwrap_or(0);
        let engine = station.shutdown().await;
        let landed = engine.drones().iter().all(|d| !d.mode.is_airborne());
        let _ = writeln!(out, "{}", json!({ "shutdown": true, "landed_from_air": airborne, "all_landed": landed }));
        EXIT_OK
    })
}
