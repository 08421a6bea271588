use std::io::{self, Write};
use std::net::TcpListener;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::AtomicBool;
use std::sync::Arc;

use armlab::bus::Bus;
use armlab::sim::{spawn, SimConfig, STANDARD_GRAVITY};
use armlab_cli::commands::{self, parse_list, CliError, IkMethod, RunOptions, ScriptedCommand};
use armlab_cli::serve::{serve, ServeOptions};
use clap::{Parser, Subcommand, ValueEnum};

/// Serial-arm teaching simulator.
#[derive(Parser)]
#[command(name = "armlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Geometric,
    Dls,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check a URDF file and list its diagnostics.
    Validate { urdf: PathBuf },
    /// Tip pose for the given joint angles: x y z roll pitch yaw.
    Fk {
        urdf: PathBuf,
        /// Joint angles in radians, comma separated.
        #[arg(long, allow_hyphen_values = true)]
        q: String,
        /// Tip link; defaults to the deepest link.
        #[arg(long)]
        tip: Option<String>,
    },
    /// Joint angles that put the tip at a position.
    Ik {
        urdf: PathBuf,
        /// Target position x,y,z in metres.
        #[arg(long, allow_hyphen_values = true)]
        target: String,
        #[arg(long, value_enum, default_value = "geometric")]
        method: Method,
        /// Initial guess for the dls method; defaults to all zeros.
        #[arg(long, allow_hyphen_values = true)]
        q0: Option<String>,
        #[arg(long)]
        tip: Option<String>,
    },
    /// Simulate without pacing and write the joint trace as CSV.
    Run {
        urdf: PathBuf,
        controllers: PathBuf,
        /// Simulated seconds.
        #[arg(long, default_value_t = 1.0)]
        duration: f64,
        /// Output file; the trace goes to stdout when omitted.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Scripted command "t,joint,value"; repeatable.
        #[arg(long = "command", allow_hyphen_values = true)]
        commands: Vec<ScriptedCommand>,
        #[arg(long, default_value_t = STANDARD_GRAVITY, allow_hyphen_values = true)]
        gravity: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
    },
    /// Serve the simulation to websocket clients, paced to the wall clock.
    Serve {
        urdf: PathBuf,
        controllers: PathBuf,
        #[arg(long, default_value_t = 9090)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = STANDARD_GRAVITY, allow_hyphen_values = true)]
        gravity: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
    },
}

fn sim_config(gravity: f64, dt: f64) -> SimConfig {
    SimConfig {
        dt,
        gravity,
        ..SimConfig::default()
    }
}

fn execute(cmd: Cmd) -> Result<(), CliError> {
    let mut stdout = io::stdout().lock();
    let mut stderr = io::stderr();
    match cmd {
        Cmd::Validate { urdf } => commands::validate(&urdf, &mut stdout),
        Cmd::Fk { urdf, q, tip } => commands::fk_command(&urdf, tip.as_deref(), &parse_list(&q)?, &mut stdout),
        Cmd::Ik {
            urdf,
            target,
            method,
            q0,
            tip,
        } => {
            let q0 = q0.as_deref().map(parse_list).transpose()?;
            let method = match method {
                Method::Geometric => IkMethod::Geometric,
                Method::Dls => IkMethod::Dls,
            };
            commands::ik_command(&urdf, tip.as_deref(), &parse_list(&target)?, method, q0.as_deref(), &mut stdout)
        }
        Cmd::Run {
            urdf,
            controllers,
            duration,
            csv,
            commands,
            gravity,
            dt,
        } => {
            let options = RunOptions {
                duration,
                config: sim_config(gravity, dt),
                commands,
            };
            commands::run_command(&urdf, &controllers, csv.as_deref(), options, &mut stdout, &mut stderr)
        }
        Cmd::Serve {
            urdf,
            controllers,
            port,
            host,
            gravity,
            dt,
        } => {
            let model = commands::load_model(&urdf, &mut stderr)?;
            let set = commands::load_controllers(&controllers)?;
            let bus = Bus::new();
            let sim = spawn(model, set, sim_config(gravity, dt), &bus)?;
            for w in sim.warnings() {
                let _ = writeln!(stderr, "warning: {w}");
            }
            let listener = TcpListener::bind((host.as_str(), port))
                .map_err(|e| CliError::Usage(format!("cannot listen on {host}:{port}: {e}")))?;
            let _ = writeln!(stderr, "serving on ws://{}", listener.local_addr().map_err(|e| CliError::Usage(e.to_string()))?);
            serve(listener, sim, bus, ServeOptions::default(), Arc::new(AtomicBool::new(false)))
                .map_err(|e| CliError::Usage(format!("server failed: {e}")))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("armlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
